#include "gsu/synthgait.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gsu/prng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace gsu::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFps = 10.0;

struct Vec3 {
    double x, y, z;
};

Vec3 rot_y(const Vec3& p, double a) {
    double c = std::cos(a), s = std::sin(a);
    return {c * p.x + s * p.z, p.y, -s * p.x + c * p.z};
}

// Local point sets, sampled once. Limb capsules are sampled in a frame
// hanging down -z from their pivot.
struct BodyCloud {
    std::vector<Vec3> torso, head;
    std::vector<Vec3> thigh[2], shin[2], arm[2];
    double torso_z0 = 0, torso_h = 0, head_r = 0;
    double hip_off = 0, thigh_len = 0, shin_len = 0;
    double shoulder_z = 0, shoulder_off = 0, arm_len = 0;
};

void sample_ellipsoid(std::vector<Vec3>& out, rng::Stream& rng, double a, double b, double c,
                      double density) {
    // Thomsen approximation of the ellipsoid surface area.
    double p = 1.6075;
    double area = 4.0 * kPi *
                  std::pow((std::pow(a * b, p) + std::pow(a * c, p) + std::pow(b * c, p)) / 3.0,
                           1.0 / p);
    int n = static_cast<int>(std::ceil(area * density));
    out.reserve(out.size() + n);
    for (int i = 0; i < n; ++i) {
        double ux = rng.next_normal(), uy = rng.next_normal(), uz = rng.next_normal();
        double len = std::sqrt(ux * ux + uy * uy + uz * uz);
        if (len < 1e-12) len = 1.0;
        out.push_back({a * ux / len, b * uy / len, c * uz / len});
    }
}

// Capsule from z=0 down to z=-len with a hemispherical foot cap.
void sample_capsule(std::vector<Vec3>& out, rng::Stream& rng, double len, double radius,
                    double density) {
    double side_area = 2.0 * kPi * radius * len;
    double cap_area = 2.0 * kPi * radius * radius;
    int n_side = static_cast<int>(std::ceil(side_area * density));
    int n_cap = static_cast<int>(std::ceil(cap_area * density));
    out.reserve(out.size() + n_side + n_cap);
    for (int i = 0; i < n_side; ++i) {
        double t = rng.next_unit();
        double a = 2.0 * kPi * rng.next_unit();
        out.push_back({radius * std::cos(a), radius * std::sin(a), -t * len});
    }
    for (int i = 0; i < n_cap; ++i) {
        double ux = rng.next_normal(), uy = rng.next_normal();
        double uz = -std::abs(rng.next_normal());
        double l = std::sqrt(ux * ux + uy * uy + uz * uz);
        if (l < 1e-12) l = 1.0;
        out.push_back({radius * ux / l, radius * uy / l, -len + radius * uz / l});
    }
}

BodyCloud build_body(const WalkerSpec& s) {
    BodyCloud b;
    b.head_r = 0.06 * s.height;
    b.torso_z0 = s.limb_length;
    b.torso_h = s.height - s.limb_length - 2.0 * b.head_r;
    check(b.torso_h > 0.1, "walker: limb length leaves no torso");
    b.hip_off = 0.45 * s.torso_radius;
    b.thigh_len = 0.55 * s.limb_length;
    b.shin_len = 0.45 * s.limb_length;
    b.shoulder_z = b.torso_z0 + 0.92 * b.torso_h;
    b.shoulder_off = s.torso_radius + 0.05;
    b.arm_len = 0.36 * s.height;

    auto rng = rng::Stream::of(s.seed, "walker-surface");
    sample_ellipsoid(b.torso, rng, 0.55 * s.torso_radius, s.torso_radius, b.torso_h / 2.0,
                     s.point_density);
    sample_ellipsoid(b.head, rng, b.head_r, b.head_r, b.head_r, s.point_density);
    for (int side = 0; side < 2; ++side) {
        sample_capsule(b.thigh[side], rng, b.thigh_len, 0.055, s.point_density);
        sample_capsule(b.shin[side], rng, b.shin_len, 0.05, s.point_density);
        sample_capsule(b.arm[side], rng, b.arm_len, 0.045, s.point_density);
    }
    return b;
}

}  // namespace

void WalkerSpec::validate() const {
    check(height >= 1.4 && height <= 2.0, "walker: height must lie in [1.4, 2.0]");
    check(gait_period >= 4, "walker: gait period must be >= 4 frames");
    check(torso_radius > 0.05 && limb_length > 0.2, "walker: degenerate body dimensions");
    check(point_density > 0, "walker: point density must be positive");
}

geom::GaitPointSequence generate(const WalkerSpec& spec, int frames) {
    spec.validate();
    check(frames >= 1, "generate: frames must be >= 1");
    BodyCloud body = build_body(spec);

    geom::GaitPointSequence seq;
    seq.frames.resize(frames);
    double ch = std::cos(spec.heading), sh = std::sin(spec.heading);

    for (int f = 0; f < frames; ++f) {
        double phase = 2.0 * kPi * static_cast<double>(f % spec.gait_period) /
                       static_cast<double>(spec.gait_period);
        double px = spec.start_x + ch * spec.speed * f / kFps;
        double py = spec.start_y + sh * spec.speed * f / kFps;

        auto& dst = seq.frames[static_cast<size_t>(f)];
        dst.reserve(body.torso.size() + body.head.size() +
                    2 * (body.thigh[0].size() + body.shin[0].size() + body.arm[0].size()));

        auto emit = [&](const Vec3& local) {
            double wx = ch * local.x - sh * local.y + px;
            double wy = sh * local.x + ch * local.y + py;
            dst.push_back({static_cast<float>(wx), static_cast<float>(wy),
                           static_cast<float>(local.z)});
        };

        double torso_cz = body.torso_z0 + body.torso_h / 2.0;
        for (const auto& p : body.torso) emit({p.x, p.y, p.z + torso_cz});
        double head_cz = body.torso_z0 + body.torso_h + body.head_r;
        for (const auto& p : body.head) emit({p.x, p.y, p.z + head_cz});

        for (int side = 0; side < 2; ++side) {
            double off = side == 0 ? 0.0 : kPi;
            double sign = side == 0 ? 1.0 : -1.0;
            double thigh_a = spec.stride_amplitude * std::sin(phase + off);
            double knee_b = 0.5 * spec.stride_amplitude * (1.0 - std::cos(phase + off));
            Vec3 hip{0.0, sign * body.hip_off, spec.limb_length};
            for (const auto& p : body.thigh[side]) {
                Vec3 q = rot_y(p, thigh_a);
                emit({q.x + hip.x, q.y + hip.y, q.z + hip.z});
            }
            Vec3 knee = rot_y({0, 0, -body.thigh_len}, thigh_a);
            knee = {knee.x + hip.x, knee.y + hip.y, knee.z + hip.z};
            for (const auto& p : body.shin[side]) {
                Vec3 q = rot_y(p, thigh_a + knee_b);
                emit({q.x + knee.x, q.y + knee.y, q.z + knee.z});
            }
            double arm_a = 0.7 * spec.stride_amplitude * std::sin(phase + off + kPi);
            Vec3 shoulder{0.0, sign * body.shoulder_off, body.shoulder_z};
            for (const auto& p : body.arm[side]) {
                Vec3 q = rot_y(p, arm_a);
                emit({q.x + shoulder.x, q.y + shoulder.y, q.z + shoulder.z});
            }
        }
    }
    return seq;
}

WalkerSpec random_walker(uint64_t seed, int subject, int sequence, int frames) {
    auto body_rng = rng::Stream::of(seed, "subject", subject);
    WalkerSpec s;
    s.height = 1.5 + 0.4 * body_rng.next_unit();
    s.torso_radius = (0.16 + 0.08 * body_rng.next_unit()) * (s.height / 1.7);
    s.limb_length = (0.44 + 0.05 * body_rng.next_unit()) * s.height;
    s.gait_period = 12 + static_cast<int>(body_rng.next_below(9));
    s.stride_amplitude = 0.35 + 0.3 * body_rng.next_unit();
    s.seed = rng::Stream::of(seed, "cloud", subject, sequence).next_u64();

    // Keep the walk path clear of the origin (the sensor position), which
    // canonicalize treats as a degenerate center.
    auto path_rng = rng::Stream::of(seed, "path", subject, sequence);
    double walk_len = s.speed * frames / kFps;
    for (;;) {
        double r = 3.5 + 1.5 * path_rng.next_unit();
        double beta = 2.0 * kPi * path_rng.next_unit();
        s.start_x = r * std::cos(beta);
        s.start_y = r * std::sin(beta);
        s.heading = beta + kPi / 2.0 + (path_rng.next_unit() - 0.5);
        double ch = std::cos(s.heading), sh = std::sin(s.heading);
        double min_d2 = 1e30;
        for (int k = 0; k <= 16; ++k) {
            double t = walk_len * k / 16.0;
            double x = s.start_x + ch * t, y = s.start_y + sh * t;
            min_d2 = std::min(min_d2, x * x + y * y);
        }
        if (min_d2 >= 1.5 * 1.5) break;
    }
    return s;
}

DatasetManifest make_dataset(const std::string& out_dir, int n_subjects, int seqs_per_subject,
                             int frames, uint64_t seed) {
    check(n_subjects >= 1 && seqs_per_subject >= 1, "make_dataset: counts must be >= 1");
    fs::create_directories(out_dir);
    DatasetManifest m;
    m.seed = seed;
    m.frames = frames;
    for (int s = 0; s < n_subjects; ++s)
        for (int q = 0; q < seqs_per_subject; ++q) {
            WalkerSpec spec = random_walker(seed, s, q, frames);
            auto seq = generate(spec, frames);
            char subj[16], name[32];
            std::snprintf(subj, sizeof subj, "s%03d", s);
            std::snprintf(name, sizeof name, "s%03d_q%02d", s, q);
            seq.subject_id = subj;
            seq.sequence_id = name;
            std::string file = std::string(name) + ".gsup";
            io::write_pointseq((fs::path(out_dir) / file).string(), seq);
            m.items.push_back({file, subj, name, frames});
        }

    json j;
    j["seed"] = m.seed;
    j["frames"] = m.frames;
    j["sequences"] = json::array();
    for (const auto& it : m.items)
        j["sequences"].push_back({{"file", it.file},
                                  {"subject", it.subject_id},
                                  {"sequence", it.sequence_id},
                                  {"frames", it.frames}});
    std::ofstream f(fs::path(out_dir) / "manifest.json");
    check(static_cast<bool>(f), "make_dataset: cannot write manifest");
    f << j.dump(2) << "\n";
    return m;
}

DatasetManifest read_manifest(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest.json");
    check(static_cast<bool>(f), "read_manifest: cannot open manifest in " + dir);
    json j = json::parse(f);
    DatasetManifest m;
    m.seed = j.at("seed").get<uint64_t>();
    m.frames = j.at("frames").get<int>();
    for (const auto& e : j.at("sequences"))
        m.items.push_back({e.at("file").get<std::string>(), e.at("subject").get<std::string>(),
                           e.at("sequence").get<std::string>(), e.at("frames").get<int>()});
    return m;
}

}  // namespace gsu::synth
