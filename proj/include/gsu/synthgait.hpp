#pragma once

// Deterministic synthetic walking pedestrians: ellipsoid torso, head
// sphere, four sinusoidally swinging limb capsules (legs as two-segment
// planar pendulums). Surface points are sampled once per sequence in
// part-local coordinates and rigidly posed per frame, so equal gait
// phases give congruent point sets up to the walk translation.

#include <string>
#include <vector>

#include "gsu/pointseq.hpp"

namespace gsu::synth {

struct WalkerSpec {
    double height = 1.7;            // m, in [1.4, 2.0]
    double torso_radius = 0.20;     // m
    double limb_length = 0.80;      // m, hip height
    int gait_period = 16;           // frames per cycle, >= 4
    double stride_amplitude = 0.5;  // rad
    double point_density = 3000.0;  // points per m^2 of body surface
    double heading = 0.0;           // rad, walk direction in the xy plane
    double start_x = 4.0;           // m, sensor at origin
    double start_y = -1.0;
    double speed = 1.2;             // m/s at 10 fps
    uint64_t seed = 0;

    void validate() const;
};

geom::GaitPointSequence generate(const WalkerSpec& spec, int frames);

struct DatasetItem {
    std::string file;
    std::string subject_id;
    std::string sequence_id;
    int frames = 0;
};

struct DatasetManifest {
    uint64_t seed = 0;
    int frames = 0;
    std::vector<DatasetItem> items;
};

// Writes <sequence>.gsup files plus manifest.json into out_dir.
DatasetManifest make_dataset(const std::string& out_dir, int n_subjects, int seqs_per_subject,
                             int frames, uint64_t seed);
DatasetManifest read_manifest(const std::string& dir);

// Body randomized per subject, path per sequence.
WalkerSpec random_walker(uint64_t seed, int subject, int sequence, int frames);

}  // namespace gsu::synth
