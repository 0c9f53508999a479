// Command-line driver: simulation, free-field statistics, diagram
// verification, inequality scans, observables and position-space
// reconstruction for the matrix-basis stochastic quantization lab.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "moyal/config.hpp"
#include "moyal/diagrams.hpp"
#include "moyal/dynamics.hpp"
#include "moyal/gaussian.hpp"
#include "moyal/io.hpp"
#include "moyal/observables.hpp"
#include "moyal/rng.hpp"
#include "moyal/snapshot.hpp"

namespace fs = std::filesystem;
using namespace moyal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCheckFailed = 4;

std::string g(double v) { return format_g17(v); }

struct Outputs {
    std::vector<std::string> files;
    std::ofstream open(const std::string& dir, const std::string& name) {
        fs::create_directories(dir);
        files.push_back(name);
        return std::ofstream(dir + "/" + name);
    }
};

int cmd_simulate(const RunConfig& cfg) {
    Outputs out;
    auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(cfg.output.directory);
    WeightTable w(cfg.model);

    const int ensemble = std::max(1, cfg.run.ensemble_size);
    std::size_t n_records = 0;
    double t_final = 0.0;
    for (int e = 0; e < ensemble; ++e) {
        ModelParams params = cfg.model;
        if (e > 0) params.seed = mix64(cfg.model.seed + 0x1734bfc0d48ull * e);
        std::string suffix = ensemble > 1 ? "_" + std::to_string(e) : "";

        std::vector<std::string> snapshot_files;
        int snap_id = 0;
        SnapshotSink sink = nullptr;
        if (cfg.output.snapshot_on) {
            sink = [&](const TrajectoryState& ts) {
                char name[64];
                std::snprintf(name, sizeof(name), "snapshot%s_%06d.msq", suffix.c_str(),
                              snap_id++);
                Snapshot snap;
                snap.t = ts.t;
                snap.cutoff = ts.ou.z.cutoff();
                snap.fields = {{"z", ts.ou.z.m}, {"v", ts.v}, {"y", ts.y},
                               {"z2", ts.wick.z2.m}, {"z3_adj", ts.wick.z3_adj.m}};
                write_snapshot(cfg.output.directory + "/" + name, snap, params);
                snapshot_files.push_back(name);
            };
        }

        SimulationResult res = simulate(params, cfg.run, sink);
        if (res.aborted) {
            std::cerr << "numeric failure: " << res.abort_reason << "\n";
            return kExitNumeric;
        }
        n_records += res.series.size();
        t_final = res.final_time;

        const bool want_csv = cfg.output.formats.find("csv") != std::string::npos;
        const bool want_json = cfg.output.formats.find("json") != std::string::npos;
        if (want_csv) {
            write_series_csv(cfg.output.directory + "/series" + suffix + ".csv", res.series);
            out.files.push_back("series" + suffix + ".csv");
            write_two_point_csv(cfg.output.directory + "/two_point" + suffix + ".csv",
                                res.two_point.mean(), res.two_point.standard_error(), w);
            out.files.push_back("two_point" + suffix + ".csv");
        }
        if (want_json) {
            nlohmann::json js = nlohmann::json::array();
            for (const auto& r : res.series)
                js.push_back({{"t", r.t}, {"v_h0", r.v_h0}, {"v_hhalf_meps", r.v_hhalf_meps},
                              {"w_h0", r.w_h0}, {"w_h0_sq", r.w_h0_sq},
                              {"energy_residual", r.energy_residual}, {"tr_phi2", r.tr_phi2},
                              {"tr_phi4_wick", r.tr_phi4_wick}});
            std::ofstream jf(cfg.output.directory + "/series" + suffix + ".json");
            jf << js.dump(1) << "\n";
            out.files.push_back("series" + suffix + ".json");
        }
        if (!res.energy.empty()) {
            write_energy_csv(cfg.output.directory + "/energy" + suffix + ".csv", res.energy);
            out.files.push_back("energy" + suffix + ".csv");
        }
        if (!res.apriori.empty()) {
            std::ofstream ap(cfg.output.directory + "/apriori" + suffix + ".csv");
            ap << "s0_h_meps,y_h0,z_m_half,z2_m_half,gamma_g,n5_bound\n";
            for (const auto& a : res.apriori)
                ap << g(a.s0_h_meps) << "," << g(a.y_h0) << "," << g(a.z_m_half) << ","
                   << g(a.z2_m_half) << "," << g(a.gamma_g) << "," << g(a.n5_bound) << "\n";
            out.files.push_back("apriori" + suffix + ".csv");
        }
        for (const auto& f : snapshot_files) out.files.push_back(f);
    }

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg.output.directory, "simulate", cfg, wall, out.files);
    std::cout << "simulate: " << ensemble << " trajectories, " << n_records
              << " records, t_final " << g(t_final) << ", outputs in " << cfg.output.directory
              << "\n";
    return kExitOk;
}

int cmd_free_field(const RunConfig& cfg) {
    Outputs out;
    auto t0 = std::chrono::steady_clock::now();
    const int n_samples = 10000;
    WeightTable w(cfg.model);
    const int dim = cfg.model.cutoff + 1;

    Eigen::ArrayXXd sum_sq = Eigen::ArrayXXd::Zero(dim, dim);
    Eigen::ArrayXXcd sum_z2 = Eigen::ArrayXXcd::Zero(dim, dim);
    Eigen::ArrayXXcd sum_z3 = Eigen::ArrayXXcd::Zero(dim, dim);
    Eigen::ArrayXXd sum_w2cov = Eigen::ArrayXXd::Zero(dim, dim);
    for (int i = 0; i < n_samples; ++i) {
        ModelParams p = cfg.model;
        p.seed = mix64(cfg.model.seed + 0x7f4a7c15ull * (i + 1));
        OUState s = sample_stationary(p, w);
        sum_sq += s.z.m.array().abs2();
        HermitianField z2 = wick2(s.z, w);
        HermitianField z3 = wick3(s.z, w, WickConvention::adjacent);
        sum_z2 += z2.m.array();
        sum_z3 += z3.m.array();
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) sum_w2cov(m, n) += (z2(m, n) * z2(n, m)).real();
    }

    auto csv = out.open(cfg.output.directory, "free_field.csv");
    csv << "m,n,mean_abs_z_sq,free_value,mean_wick2_re,mean_wick3_re,wick2_cov,wick2_cov_exact\n";
    int fails = 0;
    for (int m = 0; m < dim; ++m)
        for (int n = 0; n < dim; ++n) {
            double exact_cov = (m == n ? 1.0 / (w(m, m) * w(m, m)) : 0.0);
            for (int k = 0; k < dim; ++k) exact_cov += 1.0 / (w(m, k) * w(k, n));
            double mean_sq = sum_sq(m, n) / n_samples;
            // 3-SE agreement with 1/A_mn; per-entry variance of |z|^2 is
            // 1/A^2 (diag 2/A^2)
            double se = (m == n ? std::sqrt(2.0) : 1.0) / w(m, n) / std::sqrt(double(n_samples));
            if (std::abs(mean_sq - 1.0 / w(m, n)) > 3.0 * se) ++fails;
            csv << m << "," << n << "," << g(mean_sq) << "," << g(1.0 / w(m, n)) << ","
                << g(sum_z2(m, n).real() / n_samples) << "," << g(sum_z3(m, n).real() / n_samples)
                << "," << g(sum_w2cov(m, n) / n_samples) << "," << g(exact_cov) << "\n";
        }
    csv.close();
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg.output.directory, "free-field", cfg, wall, out.files);
    std::cout << "free-field: " << n_samples << " samples, " << fails
              << " entries outside 3 SE of 1/A\n";
    return fails == 0 ? kExitOk : kExitCheckFailed;
}

int cmd_diagrams(const RunConfig& cfg) {
    Outputs out;
    auto t0 = std::chrono::steady_clock::now();
    auto pairings = diagrams::enumerate_pairings();
    auto classes = diagrams::classify(pairings);

    auto table = out.open(cfg.output.directory, "diagram_classes.csv");
    table << "class,catalogue_ids,multiplicity,outcome,final_exponents,members\n";
    auto traces = out.open(cfg.output.directory, "diagram_traces.txt");
    int not_finite = 0;
    for (const auto& cls : classes) {
        auto trace = diagrams::reduce(cls.representative, cfg.diagrams.alpha, cfg.diagrams.beta,
                                      cfg.diagrams.delta);
        if (!trace.finite()) ++not_finite;
        table << cls.id << ",";
        for (std::size_t i = 0; i < cls.catalogue_ids.size(); ++i)
            table << (i ? "+" : "") << cls.catalogue_ids[i];
        table << "," << cls.members.size() << ","
              << (trace.finite() ? "finite" : "stuck") << ",";
        for (std::size_t i = 0; i < trace.final_exponents.size(); ++i)
            table << (i ? ";" : "") << g(trace.final_exponents[i]);
        table << ",";
        for (std::size_t i = 0; i < cls.members.size(); ++i)
            table << (i ? ";" : "") << pairings[cls.members[i]].to_string();
        table << "\n";
        traces << "class " << cls.id << " [" << pairings[cls.members.front()].to_string()
               << "]\n" << trace.to_string() << "\n";
    }
    table.close();
    traces.close();

    auto sums = out.open(cfg.output.directory, "contraction_sums.csv");
    sums << "pairing,n_sum,value\n";
    for (const auto& cls : classes) {
        const auto& p = pairings[cls.members.front()];
        for (int n_sum : cfg.diagrams.n_sum)
            sums << p.to_string() << "," << n_sum << ","
                 << g(diagrams::contraction_sum_numeric(p, cfg.diagrams.alpha, cfg.diagrams.beta,
                                                        cfg.model, n_sum))
                 << "\n";
    }
    sums.close();

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg.output.directory, "diagrams", cfg, wall, out.files);
    std::cout << "diagrams: " << pairings.size() << " pairings, " << classes.size()
              << " classes, " << not_finite << " not reduced to finite at (alpha,beta,delta)=("
              << cfg.diagrams.alpha << "," << cfg.diagrams.beta << "," << cfg.diagrams.delta
              << ")\n";
    return not_finite == 0 ? kExitOk : kExitCheckFailed;
}

int cmd_inequalities(const RunConfig& cfg) {
    Outputs out;
    auto t0 = std::chrono::steady_clock::now();
    struct Case {
        int id;
        std::vector<double> exps;
    };
    std::vector<Case> cases = {
        {1, {0.75, 0.75}}, {2, {1.0, 0.6, 0.01}}, {3, {0.6, 0.6}},
        {4, {1.5, 0.7, 0.01}}, {5, {2.0}}, {6, {0.5}},
    };
    auto csv = out.open(cfg.output.directory, "inequalities.csv");
    csv << "case,m_max,max_ratio,argmax_m,argmax_n\n";
    bool ok = true;
    for (const auto& c : cases) {
        auto r32 = check_correlation_inequality(c.id, c.exps, 32, cfg.model);
        auto r64 = check_correlation_inequality(c.id, c.exps, 64, cfg.model);
        csv << c.id << ",32," << g(r32.max_ratio) << "," << r32.argmax_m << "," << r32.argmax_n
            << "\n";
        csv << c.id << ",64," << g(r64.max_ratio) << "," << r64.argmax_m << "," << r64.argmax_n
            << "\n";
        bool bounded = r64.max_ratio <= 2.0 * r32.max_ratio;
        ok = ok && bounded;
        std::cout << "case " << c.id << ": ratio(32) = " << r32.max_ratio
                  << ", ratio(64) = " << r64.max_ratio << (bounded ? " [bounded]" : " [GROWING]")
                  << "\n";
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg.output.directory, "inequalities", cfg, wall, out.files);
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_observables(const RunConfig& cfg) {
    Outputs out;
    auto t0 = std::chrono::steady_clock::now();
    SimulationResult res = simulate(cfg.model, cfg.run, nullptr);
    if (res.aborted) {
        std::cerr << "numeric failure: " << res.abort_reason << "\n";
        return kExitNumeric;
    }

    TimeSeries tr_phi2;
    tr_phi2.name = "tr_phi2";
    tr_phi2.burn_in = cfg.run.burn_in;
    for (const auto& r : res.series) {
        tr_phi2.times.push_back(r.t);
        tr_phi2.values.push_back(r.tr_phi2);
    }
    auto avg = time_average(tr_phi2);
    auto st = stationarity_test(tr_phi2);

    auto csv = out.open(cfg.output.directory, "observables.csv");
    csv << "observable,mean,se,ks_statistic,ks_threshold,stationary\n";
    csv << "tr_phi2," << g(avg.mean) << "," << g(avg.se) << "," << g(st.statistic) << ","
        << g(st.threshold) << "," << (st.pass ? "yes" : "no") << "\n";
    csv.close();

    WeightTable w(cfg.model);
    write_two_point_csv(cfg.output.directory + "/two_point.csv", res.two_point.mean(),
                        res.two_point.standard_error(), w);
    out.files.push_back("two_point.csv");

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg.output.directory, "observables", cfg, wall, out.files);
    std::cout << "observables: tr_phi2 mean " << g(avg.mean) << " +- " << g(avg.se)
              << (st.pass ? " (stationary)" : " (NOT stationary)") << "\n";
    return st.pass ? kExitOk : kExitCheckFailed;
}

int cmd_reconstruct(const RunConfig& cfg, const std::string& snapshot_path, int grid_n,
                    double extent) {
    Outputs out;
    auto t0 = std::chrono::steady_clock::now();
    HermitianField field;
    double t_field = 0.0;
    if (!snapshot_path.empty()) {
        Snapshot snap = read_snapshot(snapshot_path);
        const CMatrix* phi = nullptr;
        const CMatrix *z = nullptr, *v = nullptr;
        for (const auto& [name, mat] : snap.fields) {
            if (name == "phi") phi = &mat;
            if (name == "z") z = &mat;
            if (name == "v") v = &mat;
        }
        if (phi) field = HermitianField(*phi);
        else if (z && v) field = HermitianField(*z + *v);
        else if (z) field = HermitianField(*z);
        else throw std::runtime_error("snapshot has no phi/z field");
        t_field = snap.t;
    } else {
        WeightTable w(cfg.model);
        field = sample_stationary(cfg.model, w).z;
    }

    std::vector<std::pair<double, double>> grid;
    for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j) {
            double x1 = -extent + 2.0 * extent * i / (grid_n - 1);
            double x2 = -extent + 2.0 * extent * j / (grid_n - 1);
            grid.emplace_back(x1, x2);
        }
    Reconstruction rec = reconstruct_field(field, grid, cfg.model.theta);

    auto csv = out.open(cfg.output.directory, "reconstruction.csv");
    csv << "x1,x2,value\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        csv << g(grid[i].first) << "," << g(grid[i].second) << "," << g(rec.values[i]) << "\n";
    csv.close();

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg.output.directory, "reconstruct", cfg, wall, out.files);
    std::cout << "reconstruct: t = " << t_field << ", " << grid.size()
              << " points, max imag residual " << rec.max_imag_residual << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic quantization of the lambda phi^4 model on 2-d Moyal space"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(kVersion));

    std::string config_path;
    std::string out_dir;
    std::string snapshot_path;
    int grid_n = 32;
    double extent = 0.0;
    double lambda = 0.0;
    long long seed = 0;
    int cutoff = 0;

    app.add_option("-c,--config", config_path, "configuration file (key = value sections)");
    app.add_option("-o,--output", out_dir, "output directory (overrides config)");
    auto* opt_lambda = app.add_option("--lambda", lambda, "override model.lambda");
    auto* opt_seed = app.add_option("--seed", seed, "override model.seed");
    auto* opt_cutoff = app.add_option("--cutoff", cutoff, "override model.cutoff");

    bool with_apriori = false;
    auto* sim = app.add_subcommand("simulate", "integrate the remainder dynamics");
    sim->add_flag("--apriori", with_apriori, "emit the a priori bound ingredients per record");
    auto* free_field = app.add_subcommand("free-field", "stationary free-field statistics");
    auto* diag = app.add_subcommand("diagrams", "verify the 105 contractions / 34 classes");
    auto* ineq = app.add_subcommand("inequalities", "numeric correlation-inequality checks");
    auto* obs = app.add_subcommand("observables", "ergodic averages and stationarity tests");
    auto* rec = app.add_subcommand("reconstruct", "position-space field on a grid");
    rec->add_option("--snapshot", snapshot_path, "snapshot file to reconstruct from");
    rec->add_option("--grid", grid_n, "grid points per axis");
    rec->add_option("--extent", extent, "half-width of the grid (default 3 sqrt(theta))");

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    try {
        cfg = config_path.empty() ? parse_config_text("") : parse_config_file(config_path);
        if (*opt_lambda) cfg.model.lambda = lambda;
        if (*opt_seed) cfg.model.seed = static_cast<std::uint64_t>(seed);
        if (*opt_cutoff) cfg.model.cutoff = cutoff;
        if (!out_dir.empty()) cfg.output.directory = out_dir;
        if (*opt_cutoff && config_path.empty()) {
            // re-derive dt = 0.1 / A_NN for the overridden cutoff
            cfg.model.dt = 0.0;
        }
        std::string err = cfg.model.validate();
        if (!err.empty()) throw ConfigError(err);
        cfg.model.resolve_defaults();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (extent == 0.0) extent = 3.0 * std::sqrt(cfg.model.theta);
    cfg.run.with_apriori = with_apriori;

    try {
        if (sim->parsed()) return cmd_simulate(cfg);
        if (free_field->parsed()) return cmd_free_field(cfg);
        if (diag->parsed()) return cmd_diagrams(cfg);
        if (ineq->parsed()) return cmd_inequalities(cfg);
        if (obs->parsed()) return cmd_observables(cfg);
        if (rec->parsed()) return cmd_reconstruct(cfg, snapshot_path, grid_n, extent);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
