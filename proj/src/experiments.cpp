#include "dtpinn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dtpinn/common.hpp"
#include "dtpinn/geometry.hpp"
#include "dtpinn/net.hpp"
#include "dtpinn/pinn.hpp"
#include "dtpinn/rbf_fd.hpp"
#include "dtpinn/sparse.hpp"

namespace dtpinn {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json parse_config(const std::string& text) {
    json cfg = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (cfg.is_discarded() || !cfg.is_object())
        throw InvalidArgument("study config must be a JSON object");
    return cfg;
}

void reject_unknown_keys(const json& cfg,
                         std::initializer_list<const char*> allowed) {
    for (const auto& item : cfg.items()) {
        const bool known = std::any_of(
            allowed.begin(), allowed.end(),
            [&](const char* k) { return item.key() == k; });
        if (!known)
            throw InvalidArgument("unknown study config key: " + item.key());
    }
}

template <typename T>
T get_or(const json& cfg, const char* key, T fallback) {
    auto it = cfg.find(key);
    return it == cfg.end() ? fallback : it->get<T>();
}

std::vector<int> sorted_unique(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

void check_p_values(const std::vector<int>& ps) {
    if (ps.empty())
        throw InvalidArgument("p_values must not be empty");
    for (int p : ps)
        if (p < 2 || p > 5)
            throw InvalidArgument("p_values entries must be in [2, 5]");
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double coefficient_of_variation(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    if (m == 0.0) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size())) / m;
}

// Median wall time of f over `repeats` runs after one discarded warm-up.
double timed_median(int repeats, const std::function<void()>& f) {
    f();
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(repeats));
    for (int i = 0; i < repeats; ++i) {
        Timer w;
        f();
        t.push_back(w.seconds());
    }
    return median(t);
}

std::vector<double> collocation_batch(const PointCloud& cloud) {
    std::vector<double> xy;
    xy.reserve(2 * cloud.n_collocation());
    for (std::size_t i = 0; i < cloud.n_collocation(); ++i) {
        const Vec2 p = cloud.point(i);
        xy.push_back(p.x);
        xy.push_back(p.y);
    }
    return xy;
}

std::vector<double> extended_batch(const PointCloud& cloud) {
    std::vector<double> xy;
    xy.reserve(2 * cloud.n_extended());
    for (const Vec2 p : cloud.extended_points()) {
        xy.push_back(p.x);
        xy.push_back(p.y);
    }
    return xy;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw IoError("write failed: " + path.string());
}

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

json cloud_info(const PointCloud& cloud) {
    return json{{"n_interior", cloud.n_interior()},
                {"n_boundary", cloud.n_boundary()},
                {"spacing", cloud.spacing}};
}

// ---------------------------------------------------------------------------
// Depth study: relative error of fp32 jets and of RBF-FD (p = 2..5) against
// fp64 jets for the Laplacian of random-weight networks, plus one-application
// timings of the two routes, swept over network depth.

json depth_study(const json& cfg, const fs::path& out) {
    reject_unknown_keys(cfg, {"n", "depths", "p_values", "seeds", "width",
                              "timing_repeats", "cloud_seed"});
    const int n = get_or(cfg, "n", 5000);
    const auto depths = sorted_unique(get_or(cfg, "depths",
                                             std::vector<int>{2, 4, 6, 8}));
    const auto p_values = sorted_unique(get_or(cfg, "p_values",
                                               std::vector<int>{2, 3, 4, 5}));
    const auto seeds = get_or(cfg, "seeds",
                              std::vector<std::uint64_t>{0, 1, 2});
    const int width = get_or(cfg, "width", 50);
    const int repeats = get_or(cfg, "timing_repeats", 5);
    const std::uint64_t cloud_seed =
        get_or(cfg, "cloud_seed", std::uint64_t{9001});
    check_p_values(p_values);
    if (depths.empty() || seeds.empty())
        throw InvalidArgument("depths and seeds must not be empty");
    for (int s : depths)
        if (s < 1) throw InvalidArgument("depths entries must be >= 1");
    if (repeats < 1) throw InvalidArgument("timing_repeats must be >= 1");

    const PointCloud cloud =
        generate_nodes(DomainShape::unit_disk(), n, cloud_seed);
    const std::size_t nc = cloud.n_collocation();
    const std::size_t ne = cloud.n_extended();
    const std::vector<double> xy = collocation_batch(cloud);
    const std::vector<double> ext = extended_batch(cloud);
    const std::vector<float> xy32(xy.begin(), xy.end());

    std::map<int, Csr<double>> lap;
    json assembly = json::array();
    for (int p : p_values) {
        Timer t;
        lap.emplace(p, assemble_matrix(cloud, MatrixKind::Laplacian, p));
        assembly.push_back({{"p", p}, {"seconds", t.seconds()}});
    }

    json jet_errors = json::array();
    json rbf_errors = json::array();
    // mean over seeds, keyed (s, p)
    std::map<std::pair<int, int>, std::vector<double>> per_sp;
    std::map<int, std::vector<double>> fp32_per_s;
    for (int s : depths) {
        const MlpSpec spec{2, width, s, 1};
        for (std::uint64_t seed : seeds) {
            const auto net = Mlp<double>::glorot(spec, seed);
            const auto ref = net.laplacian_jets(xy, nc);

            const auto net32 = Mlp<float>::glorot(spec, seed);
            const auto lap32 = net32.laplacian_jets(xy32, nc);
            const std::vector<double> widened(lap32.laplacian.begin(),
                                              lap32.laplacian.end());
            const double fp32_err = relative_l2(widened, ref.laplacian);
            jet_errors.push_back(
                {{"s", s}, {"seed", seed}, {"error", fp32_err}});
            fp32_per_s[s].push_back(fp32_err);

            const auto u_ext = net.forward(ext, ne);
            for (int p : p_values) {
                const auto lu = spmv(lap.at(p), u_ext);
                const double err = relative_l2(lu, ref.laplacian);
                rbf_errors.push_back(
                    {{"s", s}, {"seed", seed}, {"p", p}, {"error", err}});
                per_sp[{s, p}].push_back(err);
            }
        }
    }

    json jet_timings = json::array();
    json spmv_timings = json::array();
    std::vector<double> jet_secs;
    std::map<int, std::vector<double>> spmv_per_p;
    for (int s : depths) {
        const MlpSpec spec{2, width, s, 1};
        const auto net = Mlp<double>::glorot(spec, seeds.front());
        const double jt =
            timed_median(repeats, [&] { net.laplacian_jets(xy, nc); });
        jet_timings.push_back({{"s", s}, {"seconds", jt}});
        jet_secs.push_back(jt);

        const auto u_ext = net.forward(ext, ne);
        std::vector<double> y(nc);
        for (int p : p_values) {
            const Csr<double>& m = lap.at(p);
            const double st =
                timed_median(repeats, [&] { spmv(m, u_ext.data(), y.data()); });
            spmv_timings.push_back({{"s", s}, {"p", p}, {"seconds", st}});
            spmv_per_p[p].push_back(st);
        }
    }

    json mean_rbf = json::array();
    bool p_decreasing = true;
    for (int s : depths) {
        double prev = 0.0;
        bool have_prev = false;
        for (int p : p_values) {
            const double m = mean(per_sp[{s, p}]);
            mean_rbf.push_back({{"s", s}, {"p", p}, {"error", m}});
            if (p >= 3) {
                if (have_prev && !(m < prev)) p_decreasing = false;
                prev = m;
                have_prev = true;
            }
        }
    }
    json mean_jet = json::array();
    for (int s : depths)
        mean_jet.push_back({{"s", s}, {"error", mean(fp32_per_s[s])}});

    double cov = 0.0;
    for (const auto& kv : spmv_per_p)
        cov = std::max(cov, coefficient_of_variation(kv.second));
    bool jet_increasing = true;
    for (std::size_t i = 1; i < jet_secs.size(); ++i)
        if (!(jet_secs[i] > jet_secs[i - 1])) jet_increasing = false;

    std::string csv = "s,seed,route,p,error\n";
    for (const auto& r : jet_errors)
        csv += std::to_string(r["s"].get<int>()) + "," +
               std::to_string(r["seed"].get<std::uint64_t>()) +
               ",fp32_jets,0," + g17(r["error"].get<double>()) + "\n";
    for (const auto& r : rbf_errors)
        csv += std::to_string(r["s"].get<int>()) + "," +
               std::to_string(r["seed"].get<std::uint64_t>()) + ",rbf_fd," +
               std::to_string(r["p"].get<int>()) + "," +
               g17(r["error"].get<double>()) + "\n";
    write_text(out / "depth_errors.csv", csv);

    csv = "s,route,p,seconds\n";
    for (const auto& r : jet_timings)
        csv += std::to_string(r["s"].get<int>()) + ",fp64_jets,0," +
               g17(r["seconds"].get<double>()) + "\n";
    for (const auto& r : spmv_timings)
        csv += std::to_string(r["s"].get<int>()) + ",rbf_fd_spmv," +
               std::to_string(r["p"].get<int>()) + "," +
               g17(r["seconds"].get<double>()) + "\n";
    write_text(out / "depth_timings.csv", csv);

    return json{{"study", "depth"},
                {"config",
                 {{"n", n},
                  {"depths", depths},
                  {"p_values", p_values},
                  {"seeds", seeds},
                  {"width", width},
                  {"timing_repeats", repeats},
                  {"cloud_seed", cloud_seed}}},
                {"cloud", cloud_info(cloud)},
                {"assembly", assembly},
                {"fp32_jet_errors", jet_errors},
                {"rbf_errors", rbf_errors},
                {"mean_fp32_jet_errors", mean_jet},
                {"mean_rbf_errors", mean_rbf},
                {"jet_timings", jet_timings},
                {"spmv_timings", spmv_timings},
                {"spmv_time_cov", cov},
                {"jet_time_increasing", jet_increasing},
                {"rbf_error_decreasing_p3_to_p5", p_decreasing}};
}

// ---------------------------------------------------------------------------
// Biharmonic study. Fourth-order jets are out of scope, so the reference for
// Delta^2 u is a Richardson-extrapolated five-point stencil applied to the
// jet Laplacian: A(h) = FD5(Delta u; h), reference = (4 A(h/2) - A(h)) / 3.

std::vector<double> shifted_laplacian(const Mlp<double>& net,
                                      const std::vector<double>& xy,
                                      std::size_t n, double dx, double dy) {
    std::vector<double> q(xy);
    for (std::size_t i = 0; i < n; ++i) {
        q[2 * i] += dx;
        q[2 * i + 1] += dy;
    }
    return net.laplacian_jets(q, n).laplacian;
}

std::vector<double> five_point_of_laplacian(const Mlp<double>& net,
                                            const std::vector<double>& xy,
                                            std::size_t n, double h,
                                            const std::vector<double>& center) {
    const auto xp = shifted_laplacian(net, xy, n, h, 0.0);
    const auto xm = shifted_laplacian(net, xy, n, -h, 0.0);
    const auto yp = shifted_laplacian(net, xy, n, 0.0, h);
    const auto ym = shifted_laplacian(net, xy, n, 0.0, -h);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (xp[i] + xm[i] + yp[i] + ym[i] - 4.0 * center[i]) / (h * h);
    return out;
}

std::vector<double> reference_biharmonic(const Mlp<double>& net,
                                         const std::vector<double>& xy,
                                         std::size_t n, double h) {
    const auto center = net.laplacian_jets(xy, n).laplacian;
    const auto coarse = five_point_of_laplacian(net, xy, n, h, center);
    const auto fine = five_point_of_laplacian(net, xy, n, 0.5 * h, center);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    return out;
}

json biharmonic_study(const json& cfg, const fs::path& out) {
    reject_unknown_keys(cfg, {"n", "depths", "p_values", "seeds", "width",
                              "timing_repeats", "cloud_seed", "fd_step"});
    const int n = get_or(cfg, "n", 4977);
    const auto depths =
        sorted_unique(get_or(cfg, "depths", std::vector<int>{4}));
    const auto p_values = sorted_unique(get_or(cfg, "p_values",
                                               std::vector<int>{2, 3, 4, 5}));
    const auto seeds = get_or(cfg, "seeds",
                              std::vector<std::uint64_t>{0, 1, 2});
    const int width = get_or(cfg, "width", 50);
    const int repeats = get_or(cfg, "timing_repeats", 3);
    const std::uint64_t cloud_seed =
        get_or(cfg, "cloud_seed", std::uint64_t{9001});
    const double fd_step = get_or(cfg, "fd_step", 0.02);
    check_p_values(p_values);
    if (depths.empty() || seeds.empty())
        throw InvalidArgument("depths and seeds must not be empty");
    if (!(fd_step > 0.0)) throw InvalidArgument("fd_step must be > 0");
    if (repeats < 1) throw InvalidArgument("timing_repeats must be >= 1");

    const PointCloud cloud =
        generate_nodes(DomainShape::unit_disk(), n, cloud_seed);
    const std::size_t nc = cloud.n_collocation();
    const std::size_t ne = cloud.n_extended();
    const std::vector<double> xy = collocation_batch(cloud);
    const std::vector<double> ext = extended_batch(cloud);

    std::map<int, Csr<double>> bih;
    json assembly = json::array();
    for (int p : p_values) {
        Timer t;
        bih.emplace(p, assemble_matrix(cloud, MatrixKind::Biharmonic, p));
        assembly.push_back({{"p", p}, {"seconds", t.seconds()}});
    }

    json errors = json::array();
    std::map<std::pair<int, int>, std::vector<double>> per_sp;
    for (int s : depths) {
        const MlpSpec spec{2, width, s, 1};
        for (std::uint64_t seed : seeds) {
            const auto net = Mlp<double>::glorot(spec, seed);
            const auto ref = reference_biharmonic(net, xy, nc, fd_step);
            const auto u_ext = net.forward(ext, ne);
            for (int p : p_values) {
                const auto du = spmv(bih.at(p), u_ext);
                const double err = relative_l2(du, ref);
                errors.push_back(
                    {{"s", s}, {"seed", seed}, {"p", p}, {"error", err}});
                per_sp[{s, p}].push_back(err);
            }
        }
    }

    const MlpSpec tspec{2, width, depths.front(), 1};
    const auto tnet = Mlp<double>::glorot(tspec, seeds.front());
    const double jet_ref_seconds = timed_median(
        repeats, [&] { reference_biharmonic(tnet, xy, nc, fd_step); });
    const auto u_ext = tnet.forward(ext, ne);
    std::vector<double> y(nc);
    json spmv_timings = json::array();
    bool spmv_faster = true;
    for (int p : p_values) {
        const Csr<double>& m = bih.at(p);
        const double st =
            timed_median(repeats, [&] { spmv(m, u_ext.data(), y.data()); });
        spmv_timings.push_back({{"p", p}, {"seconds", st}});
        if (!(st < jet_ref_seconds)) spmv_faster = false;
    }

    json mean_errors = json::array();
    bool p_decreasing = true;
    for (int s : depths) {
        double prev = 0.0;
        bool have_prev = false;
        for (int p : p_values) {
            const double m = mean(per_sp[{s, p}]);
            mean_errors.push_back({{"s", s}, {"p", p}, {"error", m}});
            if (have_prev && !(m < prev)) p_decreasing = false;
            prev = m;
            have_prev = true;
        }
    }

    std::string csv = "s,seed,p,error\n";
    for (const auto& r : errors)
        csv += std::to_string(r["s"].get<int>()) + "," +
               std::to_string(r["seed"].get<std::uint64_t>()) + "," +
               std::to_string(r["p"].get<int>()) + "," +
               g17(r["error"].get<double>()) + "\n";
    write_text(out / "biharmonic_errors.csv", csv);

    csv = "route,p,seconds\n";
    csv += "jet_reference,0," + g17(jet_ref_seconds) + "\n";
    for (const auto& r : spmv_timings)
        csv += "rbf_fd_spmv," + std::to_string(r["p"].get<int>()) + "," +
               g17(r["seconds"].get<double>()) + "\n";
    write_text(out / "biharmonic_timings.csv", csv);

    return json{{"study", "biharmonic"},
                {"config",
                 {{"n", n},
                  {"depths", depths},
                  {"p_values", p_values},
                  {"seeds", seeds},
                  {"width", width},
                  {"timing_repeats", repeats},
                  {"cloud_seed", cloud_seed},
                  {"fd_step", fd_step}}},
                {"cloud", cloud_info(cloud)},
                {"assembly", assembly},
                {"errors", errors},
                {"mean_errors", mean_errors},
                {"jet_reference_seconds", jet_ref_seconds},
                {"spmv_timings", spmv_timings},
                {"spmv_faster_than_jets", spmv_faster},
                {"error_decreasing_in_p", p_decreasing}};
}

// ---------------------------------------------------------------------------
// Training sweeps. One study id fixes the PDE / domain / precision preset;
// the sweep runs every (n, mode, p, seed) combination, writing one run
// directory each, and aggregates seed means. Vanilla runs ignore p and are
// executed once per (n, seed).

struct SweepPreset {
    Pde pde = Pde::LinearPoisson;
    DomainShape shape;
    Precision precision = Precision::Fp64;
    std::vector<int> n_values{300, 800, 1663};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

SweepPreset sweep_preset(StudyId id) {
    SweepPreset p;
    switch (id) {
        case StudyId::LinearPoisson:
            break;
        case StudyId::NonlinearPoisson:
            p.pde = Pde::NonlinearPoisson;
            break;
        case StudyId::Heat:
            p.pde = Pde::Heat;
            p.n_values = {828};
            break;
        case StudyId::Star:
            p.shape = DomainShape::star();
            p.n_values = {2180};
            p.seeds = {0};
            break;
        case StudyId::Fp32Dt:
            p.precision = Precision::Fp32;
            break;
        default:
            throw InvalidArgument("not a training sweep study");
    }
    return p;
}

double seconds_at_best(const TrainRecord& rec) {
    for (const EpochRow& row : rec.rows)
        if (row.epoch == rec.best_epoch) return row.seconds;
    return rec.total_seconds;
}

json training_sweep(StudyId id, const json& cfg, const fs::path& out) {
    std::vector<const char*> allowed{
        "n_values",    "p_values",        "seeds",
        "modes",       "precision",       "width",
        "layers",      "alpha",           "beta",
        "error_every", "stop_error",      "test_refine",
        "lbfgs.history", "lbfgs.lr",      "lbfgs.max_epochs",
        "lbfgs.wolfe_c1", "lbfgs.wolfe_c2"};
    if (id == StudyId::Heat) allowed.push_back("n_t");
    if (id == StudyId::Star) {
        allowed.push_back("star_petals");
        allowed.push_back("star_amplitude");
    }
    for (const auto& item : cfg.items()) {
        const bool known = std::any_of(
            allowed.begin(), allowed.end(),
            [&](const char* k) { return item.key() == k; });
        if (!known)
            throw InvalidArgument("unknown study config key: " + item.key());
    }

    const SweepPreset preset = sweep_preset(id);
    const auto n_values =
        sorted_unique(get_or(cfg, "n_values", preset.n_values));
    const auto p_values = sorted_unique(get_or(cfg, "p_values",
                                               std::vector<int>{2, 3, 4, 5}));
    const auto seeds = get_or(cfg, "seeds", preset.seeds);
    const auto modes = get_or(cfg, "modes",
                              std::vector<std::string>{"dt", "vanilla"});
    check_p_values(p_values);
    for (int n : n_values)
        if (n < 50) throw InvalidArgument("n_values entries must be >= 50");
    if (seeds.empty()) throw InvalidArgument("seeds must not be empty");
    if (modes.empty()) throw InvalidArgument("modes must not be empty");
    for (const std::string& m : modes) parse_train_mode(m);

    TrainConfig base;
    base.pde = preset.pde;
    base.precision = parse_precision(
        get_or(cfg, "precision", std::string(precision_name(preset.precision))));
    base.shape = preset.shape;
    if (id == StudyId::Star) {
        base.shape = DomainShape::star(
            get_or(cfg, "star_petals", DomainShape{}.star_petals),
            get_or(cfg, "star_amplitude", DomainShape{}.star_amplitude));
    }
    base.n_t = get_or(cfg, "n_t", 24);
    base.net.hidden_width = get_or(cfg, "width", 50);
    base.net.hidden_layers = get_or(cfg, "layers", 4);
    base.alpha = get_or(cfg, "alpha", 1.0);
    base.beta = get_or(cfg, "beta", 1.0);
    base.error_every = get_or(cfg, "error_every", 1);
    base.stop_error = get_or(cfg, "stop_error", 0.0);
    base.test_refine = get_or(cfg, "test_refine", 3.6);
    base.opt.history = get_or(cfg, "lbfgs.history", base.opt.history);
    base.opt.lr = get_or(cfg, "lbfgs.lr", base.opt.lr);
    base.opt.max_epochs = get_or(cfg, "lbfgs.max_epochs", 2000);
    base.opt.wolfe_c1 = get_or(cfg, "lbfgs.wolfe_c1", base.opt.wolfe_c1);
    base.opt.wolfe_c2 = get_or(cfg, "lbfgs.wolfe_c2", base.opt.wolfe_c2);
    base.opt.validate();

    json runs = json::array();
    // seed means keyed (mode, n, p); p = 0 for vanilla
    struct Cell {
        std::vector<double> best_error, best_epoch, seconds_to_best;
        int failures = 0;
    };
    std::map<std::tuple<std::string, int, int>, Cell> cells;

    for (int n : n_values) {
        for (const std::string& mode_name : modes) {
            const TrainMode mode = parse_train_mode(mode_name);
            const std::vector<int> ps =
                mode == TrainMode::Dt ? p_values : std::vector<int>{0};
            for (int p : ps) {
                for (std::uint64_t seed : seeds) {
                    TrainConfig tc = base;
                    tc.mode = mode;
                    tc.p = mode == TrainMode::Dt ? p : 4;
                    tc.target_n = n;
                    tc.seed = seed;

                    std::string name = mode_name + "_n" + std::to_string(n);
                    if (mode == TrainMode::Dt)
                        name += "_p" + std::to_string(p);
                    name += "_seed" + std::to_string(seed);
                    const fs::path run_dir = out / name;
                    fs::create_directories(run_dir);

                    json row{{"name", name},
                             {"mode", mode_name},
                             {"n", n},
                             {"seed", seed}};
                    if (mode == TrainMode::Dt) row["p"] = p;
                    Cell& cell = cells[{mode_name, n, p}];
                    try {
                        const TrainRecord rec = train(tc);
                        write_record_csv(rec,
                                         (run_dir / "record.csv").string());
                        write_summary_json(
                            rec, tc, (run_dir / "summary.json").string());
                        const double to_best =
                            rec.assembly_seconds + seconds_at_best(rec);
                        row["status"] = "ok";
                        row["best_error"] = rec.best_error;
                        row["best_epoch"] = rec.best_epoch;
                        row["epochs_run"] = rec.epochs_run;
                        row["stop_reason"] = rec.stop_reason;
                        row["assembly_seconds"] = rec.assembly_seconds;
                        row["seconds_to_best"] = to_best;
                        row["total_seconds"] = rec.total_seconds;
                        cell.best_error.push_back(rec.best_error);
                        cell.best_epoch.push_back(
                            static_cast<double>(rec.best_epoch));
                        cell.seconds_to_best.push_back(to_best);
                    } catch (const std::exception& e) {
                        row["status"] = "failed";
                        row["error"] = e.what();
                        cell.failures += 1;
                    }
                    runs.push_back(row);
                }
            }
        }
    }

    json aggregate = json::array();
    for (const auto& [key, cell] : cells) {
        const auto& [mode_name, n, p] = key;
        json row{{"mode", mode_name},
                 {"n", n},
                 {"runs", cell.best_error.size() + cell.failures},
                 {"failures", cell.failures}};
        if (mode_name == "dt") row["p"] = p;
        if (!cell.best_error.empty()) {
            row["mean_best_error"] = mean(cell.best_error);
            row["mean_best_epoch"] = mean(cell.best_epoch);
            row["mean_seconds_to_best"] = mean(cell.seconds_to_best);
        }
        aggregate.push_back(row);
    }

    // speedup = vanilla time to best error / DT time to best error, seed means
    json speedup = json::array();
    for (int n : n_values) {
        const auto vit = cells.find({"vanilla", n, 0});
        if (vit == cells.end() || vit->second.seconds_to_best.empty()) continue;
        const double vt = mean(vit->second.seconds_to_best);
        for (int p : p_values) {
            const auto dit = cells.find({"dt", n, p});
            if (dit == cells.end() || dit->second.seconds_to_best.empty())
                continue;
            const double dt_time = mean(dit->second.seconds_to_best);
            speedup.push_back({{"n", n},
                               {"p", p},
                               {"vanilla_seconds", vt},
                               {"dt_seconds", dt_time},
                               {"speedup", dt_time > 0.0 ? vt / dt_time : 0.0}});
        }
    }

    std::string csv =
        "mode,n,p,runs,failures,mean_best_error,mean_best_epoch,"
        "mean_seconds_to_best\n";
    for (const auto& row : aggregate) {
        csv += row["mode"].get<std::string>() + "," +
               std::to_string(row["n"].get<int>()) + "," +
               (row.contains("p") ? std::to_string(row["p"].get<int>()) : "0") +
               "," + std::to_string(row["runs"].get<std::size_t>()) + "," +
               std::to_string(row["failures"].get<int>()) + ",";
        if (row.contains("mean_best_error"))
            csv += g17(row["mean_best_error"].get<double>()) + "," +
                   g17(row["mean_best_epoch"].get<double>()) + "," +
                   g17(row["mean_seconds_to_best"].get<double>());
        else
            csv += ",,";
        csv += "\n";
    }
    write_text(out / "aggregate.csv", csv);

    return json{{"study", study_id_name(id)},
                {"config",
                 {{"pde", pde_name(base.pde)},
                  {"precision", precision_name(base.precision)},
                  {"n_values", n_values},
                  {"p_values", p_values},
                  {"seeds", seeds},
                  {"modes", modes},
                  {"n_t", base.n_t},
                  {"width", base.net.hidden_width},
                  {"layers", base.net.hidden_layers},
                  {"alpha", base.alpha},
                  {"beta", base.beta},
                  {"error_every", base.error_every},
                  {"stop_error", base.stop_error},
                  {"test_refine", base.test_refine},
                  {"lbfgs",
                   {{"history", base.opt.history},
                    {"lr", base.opt.lr},
                    {"max_epochs", base.opt.max_epochs},
                    {"wolfe_c1", base.opt.wolfe_c1},
                    {"wolfe_c2", base.opt.wolfe_c2}}}}},
                {"runs", runs},
                {"aggregate", aggregate},
                {"speedup", speedup}};
}

}  // namespace

const char* study_id_name(StudyId id) {
    switch (id) {
        case StudyId::Depth: return "depth";
        case StudyId::Biharmonic: return "biharmonic";
        case StudyId::LinearPoisson: return "linear-poisson";
        case StudyId::NonlinearPoisson: return "nonlinear-poisson";
        case StudyId::Heat: return "heat";
        case StudyId::Star: return "star";
        case StudyId::Fp32Dt: return "fp32-dt";
    }
    throw InvalidArgument("unknown study id");
}

StudyId parse_study_id(const std::string& name) {
    for (StudyId id : {StudyId::Depth, StudyId::Biharmonic,
                       StudyId::LinearPoisson, StudyId::NonlinearPoisson,
                       StudyId::Heat, StudyId::Star, StudyId::Fp32Dt})
        if (name == study_id_name(id)) return id;
    throw InvalidArgument("unknown study id: " + name);
}

std::string run_study(StudyId id, const std::string& config_json,
                      const std::string& out_dir) {
    const json cfg = parse_config(config_json);
    const fs::path out(out_dir);
    fs::create_directories(out);

    json report;
    switch (id) {
        case StudyId::Depth:
            report = depth_study(cfg, out);
            break;
        case StudyId::Biharmonic:
            report = biharmonic_study(cfg, out);
            break;
        default:
            report = training_sweep(id, cfg, out);
            break;
    }
    const std::string text = report.dump(2) + "\n";
    write_text(out / "report.json", text);
    return text;
}

}  // namespace dtpinn
