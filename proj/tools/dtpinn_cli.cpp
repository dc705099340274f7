#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtpinn.h"

namespace {

using nlohmann::json;

int fail(int status) {
    std::fprintf(stderr, "error: %s (%s)\n", dtpinn_last_error(),
                 dtpinn_status_name(status));
    return 1;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

bool load_config(const std::string& path, json& out) {
    if (path.empty()) {
        out = json::object();
        return true;
    }
    std::ifstream is(path);
    if (!is) {
        std::fprintf(stderr, "error: cannot open config file %s\n",
                     path.c_str());
        return false;
    }
    out = json::parse(is, nullptr, /*allow_exceptions=*/false);
    if (out.is_discarded() || !out.is_object()) {
        std::fprintf(stderr, "error: config file %s is not a JSON object\n",
                     path.c_str());
        return false;
    }
    return true;
}

void print(const json& j) { std::printf("%s\n", j.dump(2).c_str()); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Meshless PDE toolkit: RBF-FD differentiation matrices and "
                 "discretely-trained PINNs"};
    app.require_subcommand(1);

    // nodes
    auto* nodes = app.add_subcommand("nodes", "Generate a collocation cloud");
    int gen_n = 1663;
    unsigned long long gen_seed = 0;
    std::string gen_shape = "disk";
    int gen_petals = 5;
    double gen_amplitude = 0.25;
    std::string gen_out;
    nodes->add_option("--n", gen_n, "Target interior+boundary count")
        ->required();
    nodes->add_option("--seed", gen_seed, "Generation seed");
    nodes->add_option("--shape", gen_shape, "Domain shape")
        ->check(CLI::IsMember({"disk", "star"}));
    nodes->add_option("--star-petals", gen_petals, "Star petal count");
    nodes->add_option("--star-amplitude", gen_amplitude,
                      "Star boundary amplitude");
    nodes->add_option("--nodes-out", gen_out, "Node file to write");

    // weights
    auto* weights =
        app.add_subcommand("weights", "Assemble a differentiation matrix");
    int w_p = 0;
    std::string w_op = "laplacian";
    double w_alpha = 1.0, w_beta = 1.0;
    std::string w_nodes_in, w_dump;
    weights->add_option("--p", w_p, "RBF-FD order")
        ->required()
        ->check(CLI::Range(2, 5));
    weights->add_option("--operator", w_op, "Operator to discretize")
        ->check(CLI::IsMember({"laplacian", "robin", "biharmonic"}));
    weights->add_option("--alpha", w_alpha, "Robin normal-derivative weight");
    weights->add_option("--beta", w_beta, "Robin value weight");
    weights->add_option("--nodes-in", w_nodes_in, "Node file to read")
        ->required();
    weights->add_option("--matrix-dump", w_dump, "Matrix file to write");

    // train
    auto* train = app.add_subcommand("train", "Train one PINN");
    std::string t_pde, t_mode = "dt", t_precision = "fp64";
    int t_p = 4, t_n = 1663;
    unsigned long long t_seed = 0;
    std::string t_out, t_nodes_in, t_nodes_out, t_ckpt_in, t_ckpt_out,
        t_config;
    train->add_option("--pde", t_pde, "PDE to solve")
        ->required()
        ->check(CLI::IsMember({"linear-poisson", "nonlinear-poisson", "heat"}));
    train->add_option("--mode", t_mode, "Differentiation mode")
        ->check(CLI::IsMember({"dt", "vanilla"}));
    train->add_option("--p", t_p, "RBF-FD order (dt mode)")
        ->check(CLI::Range(2, 5));
    train->add_option("--precision", t_precision, "Training precision")
        ->check(CLI::IsMember({"fp32", "fp64"}));
    train->add_option("--n", t_n, "Target collocation count");
    train->add_option("--seed", t_seed, "Cloud and init seed");
    train->add_option("--out", t_out, "Output directory")->required();
    train->add_option("--nodes-in", t_nodes_in, "Node file to train on");
    train->add_option("--nodes-out", t_nodes_out, "Write the cloud here");
    train->add_option("--checkpoint-in", t_ckpt_in, "Resume from checkpoint");
    train->add_option("--checkpoint-out", t_ckpt_out, "Final checkpoint path");
    train->add_option("--config", t_config,
                      "JSON config file; flags given here override it");

    // study
    auto* study = app.add_subcommand("study", "Run a scripted study");
    std::string s_id, s_config, s_out;
    study->add_option("--id", s_id, "Study id")
        ->required()
        ->check(CLI::IsMember({"depth", "biharmonic", "linear-poisson",
                               "nonlinear-poisson", "heat", "star",
                               "fp32-dt"}));
    study->add_option("--config", s_config, "JSON config file");
    study->add_option("--out", s_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (nodes->parsed()) {
        dtpinn_cloud* cloud = nullptr;
        const auto t0 = std::chrono::steady_clock::now();
        int rc = dtpinn_cloud_generate(gen_shape.c_str(), gen_petals,
                                       gen_amplitude, gen_n, gen_seed, &cloud);
        if (rc != DTPINN_OK) return fail(rc);
        const double secs = seconds_since(t0);

        long long ni = 0, nb = 0, ng = 0;
        double spacing = 0.0;
        dtpinn_cloud_counts(cloud, &ni, &nb, &ng);
        dtpinn_cloud_spacing(cloud, &spacing);
        json summary{{"shape", gen_shape},   {"seed", gen_seed},
                     {"n_interior", ni},     {"n_boundary", nb},
                     {"n_ghost", ng},        {"spacing", spacing},
                     {"seconds", secs}};
        if (!gen_out.empty()) {
            rc = dtpinn_cloud_write(cloud, gen_out.c_str());
            if (rc != DTPINN_OK) {
                dtpinn_cloud_free(cloud);
                return fail(rc);
            }
            summary["nodes_out"] = gen_out;
        }
        dtpinn_cloud_free(cloud);
        print(summary);
        return 0;
    }

    if (weights->parsed()) {
        dtpinn_cloud* cloud = nullptr;
        int rc = dtpinn_cloud_read(w_nodes_in.c_str(), &cloud);
        if (rc != DTPINN_OK) return fail(rc);

        dtpinn_matrix* matrix = nullptr;
        const auto t0 = std::chrono::steady_clock::now();
        rc = dtpinn_matrix_assemble(cloud, w_op.c_str(), w_p, w_alpha, w_beta,
                                    &matrix);
        const double secs = seconds_since(t0);
        dtpinn_cloud_free(cloud);
        if (rc != DTPINN_OK) return fail(rc);

        long long rows = 0, cols = 0, nnz = 0;
        dtpinn_matrix_shape(matrix, &rows, &cols, &nnz);
        json summary{{"operator", w_op}, {"p", w_p},
                     {"alpha", w_alpha}, {"beta", w_beta},
                     {"rows", rows},     {"cols", cols},
                     {"nnz", nnz},       {"assembly_seconds", secs}};
        if (!w_dump.empty()) {
            rc = dtpinn_matrix_write(matrix, w_dump.c_str());
            if (rc != DTPINN_OK) {
                dtpinn_matrix_free(matrix);
                return fail(rc);
            }
            summary["matrix_dump"] = w_dump;
        }
        dtpinn_matrix_free(matrix);
        print(summary);
        return 0;
    }

    if (train->parsed()) {
        json cfg;
        if (!load_config(t_config, cfg)) return 1;
        cfg["pde"] = t_pde;
        if (train->count("--mode")) cfg["mode"] = t_mode;
        if (train->count("--p")) cfg["p"] = t_p;
        if (train->count("--precision")) cfg["precision"] = t_precision;
        if (train->count("--n")) cfg["n"] = t_n;
        if (train->count("--seed")) cfg["seed"] = t_seed;
        if (!t_nodes_in.empty()) cfg["nodes_in"] = t_nodes_in;
        if (!t_nodes_out.empty()) cfg["nodes_out"] = t_nodes_out;
        if (!t_ckpt_in.empty()) cfg["checkpoint_in"] = t_ckpt_in;
        if (!t_ckpt_out.empty()) cfg["checkpoint_out"] = t_ckpt_out;

        dtpinn_train_summary summary{};
        const int rc =
            dtpinn_train_run(cfg.dump().c_str(), t_out.c_str(), &summary);
        if (rc != DTPINN_OK) return fail(rc);
        print(json{{"best_error", summary.best_error},
                   {"best_epoch", summary.best_epoch},
                   {"epochs_run", summary.epochs_run},
                   {"assembly_seconds", summary.assembly_seconds},
                   {"total_seconds", summary.total_seconds},
                   {"final_loss", summary.final_loss},
                   {"stop_reason", summary.stop_reason},
                   {"out", t_out}});
        return 0;
    }

    if (study->parsed()) {
        json cfg;
        if (!load_config(s_config, cfg)) return 1;
        const int rc =
            dtpinn_study_run(s_id.c_str(), cfg.dump().c_str(), s_out.c_str());
        if (rc != DTPINN_OK) return fail(rc);
        print(json{{"study", s_id}, {"report", s_out + "/report.json"}});
        return 0;
    }

    return 0;
}
