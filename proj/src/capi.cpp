#include "dtpinn.h"

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <utility>

#include <json.hpp>

#include "dtpinn/common.hpp"
#include "dtpinn/experiments.hpp"
#include "dtpinn/geometry.hpp"
#include "dtpinn/pinn.hpp"
#include "dtpinn/rbf_fd.hpp"
#include "dtpinn/sparse.hpp"

struct dtpinn_cloud {
    dtpinn::PointCloud impl;
};

struct dtpinn_matrix {
    dtpinn::Csr<double> impl;
};

namespace {

using nlohmann::json;

thread_local std::string t_last_error;

template <typename F>
int guarded(F&& f) {
    try {
        f();
        t_last_error.clear();
        return DTPINN_OK;
    } catch (const dtpinn::InvalidArgument& e) {
        t_last_error = e.what();
        return DTPINN_ERR_INVALID_ARGUMENT;
    } catch (const dtpinn::IoError& e) {
        t_last_error = e.what();
        return DTPINN_ERR_IO;
    } catch (const dtpinn::SingularSystem& e) {
        t_last_error = e.what();
        return DTPINN_ERR_SINGULAR;
    } catch (const dtpinn::LineSearchFailure& e) {
        t_last_error = e.what();
        return DTPINN_ERR_LINE_SEARCH;
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return DTPINN_ERR_INTERNAL;
    }
}

void require(bool ok, const char* message) {
    if (!ok) throw dtpinn::InvalidArgument(message);
}

dtpinn::DomainShape parse_shape(const std::string& name, int petals,
                                double amplitude) {
    if (name == "disk") return dtpinn::DomainShape::unit_disk();
    if (name == "star") return dtpinn::DomainShape::star(petals, amplitude);
    throw dtpinn::InvalidArgument("unknown shape: " + name);
}

dtpinn::MatrixKind parse_matrix_kind(const std::string& name) {
    if (name == "laplacian") return dtpinn::MatrixKind::Laplacian;
    if (name == "robin") return dtpinn::MatrixKind::Robin;
    if (name == "biharmonic") return dtpinn::MatrixKind::Biharmonic;
    throw dtpinn::InvalidArgument("unknown operator: " + name);
}

template <typename T>
T get_or(const json& cfg, const char* key, T fallback) {
    auto it = cfg.find(key);
    return it == cfg.end() ? fallback : it->get<T>();
}

struct TrainSetup {
    dtpinn::TrainConfig cfg;
    std::string nodes_in;
    std::string nodes_out;
};

TrainSetup parse_train_setup(const char* config_json) {
    require(config_json != nullptr, "config_json is null");
    const json cfg = json::parse(config_json, nullptr,
                                 /*allow_exceptions=*/false);
    if (cfg.is_discarded() || !cfg.is_object())
        throw dtpinn::InvalidArgument("train config must be a JSON object");

    static const char* const known[] = {
        "pde",           "mode",           "p",
        "precision",     "n",              "seed",
        "n_t",           "shape",          "star_petals",
        "star_amplitude", "width",         "layers",
        "alpha",         "beta",           "error_every",
        "stop_error",    "test_refine",    "lbfgs.history",
        "lbfgs.lr",      "lbfgs.max_epochs", "lbfgs.wolfe_c1",
        "lbfgs.wolfe_c2", "nodes_in",      "nodes_out",
        "checkpoint_in", "checkpoint_out"};
    for (const auto& item : cfg.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || item.key() == k;
        if (!ok)
            throw dtpinn::InvalidArgument("unknown train config key: " +
                                          item.key());
    }

    TrainSetup setup;
    dtpinn::TrainConfig& tc = setup.cfg;
    tc.pde = dtpinn::parse_pde(
        get_or(cfg, "pde", std::string(dtpinn::pde_name(tc.pde))));
    tc.mode = dtpinn::parse_train_mode(
        get_or(cfg, "mode", std::string(dtpinn::train_mode_name(tc.mode))));
    tc.p = get_or(cfg, "p", tc.p);
    require(tc.p >= 2 && tc.p <= 5, "p must be in [2, 5]");
    tc.precision = dtpinn::parse_precision(get_or(
        cfg, "precision", std::string(dtpinn::precision_name(tc.precision))));
    tc.target_n = get_or(cfg, "n", tc.target_n);
    tc.seed = get_or(cfg, "seed", tc.seed);
    tc.n_t = get_or(cfg, "n_t", tc.n_t);
    tc.shape = parse_shape(
        get_or(cfg, "shape", std::string("disk")),
        get_or(cfg, "star_petals", dtpinn::DomainShape{}.star_petals),
        get_or(cfg, "star_amplitude", dtpinn::DomainShape{}.star_amplitude));
    tc.net.hidden_width = get_or(cfg, "width", tc.net.hidden_width);
    tc.net.hidden_layers = get_or(cfg, "layers", tc.net.hidden_layers);
    tc.alpha = get_or(cfg, "alpha", tc.alpha);
    tc.beta = get_or(cfg, "beta", tc.beta);
    tc.error_every = get_or(cfg, "error_every", tc.error_every);
    tc.stop_error = get_or(cfg, "stop_error", tc.stop_error);
    tc.test_refine = get_or(cfg, "test_refine", tc.test_refine);
    tc.opt.history = get_or(cfg, "lbfgs.history", tc.opt.history);
    tc.opt.lr = get_or(cfg, "lbfgs.lr", tc.opt.lr);
    tc.opt.max_epochs = get_or(cfg, "lbfgs.max_epochs", tc.opt.max_epochs);
    tc.opt.wolfe_c1 = get_or(cfg, "lbfgs.wolfe_c1", tc.opt.wolfe_c1);
    tc.opt.wolfe_c2 = get_or(cfg, "lbfgs.wolfe_c2", tc.opt.wolfe_c2);
    tc.checkpoint_in = get_or(cfg, "checkpoint_in", tc.checkpoint_in);
    tc.checkpoint_out = get_or(cfg, "checkpoint_out", tc.checkpoint_out);
    setup.nodes_in = get_or(cfg, "nodes_in", std::string());
    setup.nodes_out = get_or(cfg, "nodes_out", std::string());
    return setup;
}

}  // namespace

extern "C" {

const char* dtpinn_version(void) { return "0.1.0"; }

const char* dtpinn_status_name(int status) {
    switch (status) {
        case DTPINN_OK: return "ok";
        case DTPINN_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case DTPINN_ERR_IO: return "io_error";
        case DTPINN_ERR_SINGULAR: return "singular_system";
        case DTPINN_ERR_LINE_SEARCH: return "line_search_failure";
        case DTPINN_ERR_INTERNAL: return "internal_error";
        default: return "unknown";
    }
}

const char* dtpinn_last_error(void) { return t_last_error.c_str(); }

int dtpinn_cloud_generate(const char* shape, int star_petals,
                          double star_amplitude, int target_n,
                          unsigned long long seed, dtpinn_cloud** out) {
    return guarded([&] {
        require(out != nullptr, "out is null");
        require(shape != nullptr, "shape is null");
        auto cloud = dtpinn::generate_nodes(
            parse_shape(shape, star_petals, star_amplitude), target_n, seed);
        *out = new dtpinn_cloud{std::move(cloud)};
    });
}

int dtpinn_cloud_read(const char* path, dtpinn_cloud** out) {
    return guarded([&] {
        require(out != nullptr, "out is null");
        require(path != nullptr, "path is null");
        *out = new dtpinn_cloud{dtpinn::read_cloud(path)};
    });
}

int dtpinn_cloud_write(const dtpinn_cloud* cloud, const char* path) {
    return guarded([&] {
        require(cloud != nullptr, "cloud is null");
        require(path != nullptr, "path is null");
        dtpinn::write_cloud(cloud->impl, path);
    });
}

int dtpinn_cloud_counts(const dtpinn_cloud* cloud, long long* n_interior,
                        long long* n_boundary, long long* n_ghost) {
    return guarded([&] {
        require(cloud != nullptr, "cloud is null");
        if (n_interior)
            *n_interior = static_cast<long long>(cloud->impl.n_interior());
        if (n_boundary)
            *n_boundary = static_cast<long long>(cloud->impl.n_boundary());
        if (n_ghost) *n_ghost = static_cast<long long>(cloud->impl.n_ghost());
    });
}

int dtpinn_cloud_spacing(const dtpinn_cloud* cloud, double* spacing) {
    return guarded([&] {
        require(cloud != nullptr, "cloud is null");
        require(spacing != nullptr, "spacing is null");
        *spacing = cloud->impl.spacing;
    });
}

int dtpinn_cloud_points(const dtpinn_cloud* cloud, double* xy,
                        long long capacity) {
    return guarded([&] {
        require(cloud != nullptr, "cloud is null");
        require(xy != nullptr, "xy is null");
        const auto points = cloud->impl.extended_points();
        require(capacity >= static_cast<long long>(2 * points.size()),
                "xy capacity too small");
        for (std::size_t i = 0; i < points.size(); ++i) {
            xy[2 * i] = points[i].x;
            xy[2 * i + 1] = points[i].y;
        }
    });
}

void dtpinn_cloud_free(dtpinn_cloud* cloud) { delete cloud; }

int dtpinn_matrix_assemble(const dtpinn_cloud* cloud, const char* op, int p,
                           double alpha, double beta, dtpinn_matrix** out) {
    return guarded([&] {
        require(out != nullptr, "out is null");
        require(cloud != nullptr, "cloud is null");
        require(op != nullptr, "op is null");
        require(p >= 2 && p <= 5, "p must be in [2, 5]");
        auto matrix = dtpinn::assemble_matrix(cloud->impl,
                                              parse_matrix_kind(op), p, alpha,
                                              beta);
        *out = new dtpinn_matrix{std::move(matrix)};
    });
}

int dtpinn_matrix_shape(const dtpinn_matrix* matrix, long long* rows,
                        long long* cols, long long* nnz) {
    return guarded([&] {
        require(matrix != nullptr, "matrix is null");
        if (rows) *rows = static_cast<long long>(matrix->impl.n_rows);
        if (cols) *cols = static_cast<long long>(matrix->impl.n_cols);
        if (nnz) *nnz = static_cast<long long>(matrix->impl.nnz());
    });
}

int dtpinn_matrix_spmv(const dtpinn_matrix* matrix, const double* x,
                       long long x_len, double* y, long long y_len) {
    return guarded([&] {
        require(matrix != nullptr, "matrix is null");
        require(x != nullptr && y != nullptr, "x or y is null");
        require(x_len == static_cast<long long>(matrix->impl.n_cols),
                "x_len does not match matrix columns");
        require(y_len == static_cast<long long>(matrix->impl.n_rows),
                "y_len does not match matrix rows");
        dtpinn::spmv(matrix->impl, x, y);
    });
}

int dtpinn_matrix_write(const dtpinn_matrix* matrix, const char* path) {
    return guarded([&] {
        require(matrix != nullptr, "matrix is null");
        require(path != nullptr, "path is null");
        dtpinn::write_matrix(matrix->impl, path);
    });
}

int dtpinn_matrix_read(const char* path, dtpinn_matrix** out) {
    return guarded([&] {
        require(out != nullptr, "out is null");
        require(path != nullptr, "path is null");
        *out = new dtpinn_matrix{dtpinn::read_matrix(path)};
    });
}

void dtpinn_matrix_free(dtpinn_matrix* matrix) { delete matrix; }

int dtpinn_train_run(const char* config_json, const char* out_dir,
                     dtpinn_train_summary* summary) {
    return guarded([&] {
        TrainSetup setup = parse_train_setup(config_json);

        dtpinn::PointCloud cloud =
            setup.nodes_in.empty()
                ? dtpinn::generate_nodes(setup.cfg.shape, setup.cfg.target_n,
                                         setup.cfg.seed)
                : dtpinn::read_cloud(setup.nodes_in);
        if (!setup.nodes_out.empty())
            dtpinn::write_cloud(cloud, setup.nodes_out);

        const dtpinn::TrainRecord record = dtpinn::train(setup.cfg, cloud);

        if (out_dir != nullptr && out_dir[0] != '\0') {
            const std::string dir(out_dir);
            std::filesystem::create_directories(dir);
            dtpinn::write_record_csv(record, dir + "/record.csv");
            dtpinn::write_summary_json(record, setup.cfg,
                                       dir + "/summary.json");
        }
        if (summary != nullptr) {
            summary->best_error = record.best_error;
            summary->best_epoch = record.best_epoch;
            summary->epochs_run = record.epochs_run;
            summary->assembly_seconds = record.assembly_seconds;
            summary->total_seconds = record.total_seconds;
            summary->final_loss = record.final_loss;
            std::snprintf(summary->stop_reason, sizeof(summary->stop_reason),
                          "%s", record.stop_reason.c_str());
        }
    });
}

int dtpinn_study_run(const char* study_id, const char* config_json,
                     const char* out_dir) {
    return guarded([&] {
        require(study_id != nullptr, "study_id is null");
        require(out_dir != nullptr, "out_dir is null");
        dtpinn::run_study(dtpinn::parse_study_id(study_id),
                          config_json == nullptr ? "{}" : config_json,
                          out_dir);
    });
}

}  // extern "C"
