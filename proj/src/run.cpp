#include "cmkv/run.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmkv/diagnostics.hpp"
#include "cmkv/expr.hpp"
#include "cmkv/finite_system.hpp"
#include "cmkv/generator.hpp"
#include "cmkv/limit_system.hpp"
#include "cmkv/multipop.hpp"
#include "cmkv/picard.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cmkv {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t parse_seed(const std::string& text) {
    try {
        if (text.starts_with("0x") || text.starts_with("0X"))
            return std::stoull(text.substr(2), nullptr, 16);
        return std::stoull(text);
    } catch (const std::exception&) {
        throw ConfigError("seed must be a decimal or 0x-hex integer: " + text);
    }
}

std::string fmt_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", t);
    return buf;
}

std::string fmt_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct RunContext {
    std::string module;
    std::string model_path;
    std::string model_text;
    std::uint64_t seed = 1;
    std::uint64_t config_hash = 0;
    std::string out_dir;
    std::vector<std::string> outputs;
    json extra;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void hash_config(const std::string& flags) {
        config_hash = fnv1a64(model_text + "\n" + flags);
    }

    std::string header(const std::string& kind) const {
        std::ostringstream h;
        char hash[32];
        std::snprintf(hash, sizeof hash, "0x%016llx",
                      static_cast<unsigned long long>(config_hash));
        h << "# cmkv " << kind << "\n";
        h << "# config_hash=" << hash << "\n";
        h << "# seed=" << seed << "\n";
        return h.str();
    }

    std::ofstream open_output(const std::string& name) {
        fs::create_directories(out_dir);
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot write output file '" + path + "'");
        outputs.push_back(name);
        return out;
    }

    void write_manifest() {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json m;
        char hash[32];
        std::snprintf(hash, sizeof hash, "0x%016llx",
                      static_cast<unsigned long long>(config_hash));
        m["config_hash"] = hash;
        m["seed"] = seed;
        m["module"] = module;
        m["version"] = kVersion;
        m["wall_clock_s"] = wall;
        std::sort(outputs.begin(), outputs.end());
        m["outputs"] = outputs;
        if (!extra.is_null()) m["details"] = extra;
        fs::create_directories(out_dir);
        const fs::path final_path = fs::path(out_dir) / "manifest.json";
        const fs::path tmp_path = fs::path(out_dir) / "manifest.json.tmp";
        {
            std::ofstream out(tmp_path, std::ios::binary);
            out << m.dump(2) << "\n";
        }
        fs::rename(tmp_path, final_path);  // atomic publish after all outputs
    }
};

void write_states_csv(std::ofstream& out, const RunContext& ctx, const std::string& kind,
                      const TrajectoryBundle& bundle, const std::string& column_prefix,
                      std::uint32_t replication) {
    out << ctx.header(kind);
    out << "# replication=" << replication << "\n";
    out << "time";
    for (std::size_t i = 0; i < bundle.n_particles(); ++i) out << ',' << column_prefix << i;
    out << "\n";
    for (std::size_t g = 0; g < bundle.times.size(); ++g) {
        out << fmt_time(bundle.times[g]);
        for (double v : bundle.states[g]) out << ',' << fmt_value(v);
        out << "\n";
    }
}

void write_jump_log_csv(std::ofstream& out, const RunContext& ctx,
                        const TrajectoryBundle& bundle, std::uint32_t replication,
                        int self_pop) {
    const bool with_pop = self_pop >= 0;
    out << ctx.header("jump-log");
    out << "# replication=" << replication << "\n";
    out << (with_pop ? "time,sender_pop,sender,receiver,increment\n"
                     : "time,sender,receiver,increment\n");
    if (!bundle.jump_log) return;
    for (const JumpEvent& ev : *bundle.jump_log) {
        const bool same_pop = !with_pop || ev.sender_pop == static_cast<std::uint32_t>(self_pop);
        for (std::size_t i = 0; i < ev.receiver_increments.size(); ++i) {
            if (same_pop && ev.sender == i) continue;  // no auto-interaction slot
            out << fmt_time(ev.time) << ',';
            if (with_pop) out << ev.sender_pop + 1 << ',';
            out << ev.sender << ',' << i << ',' << fmt_value(ev.receiver_increments[i])
                << "\n";
        }
    }
}

int effective_jobs(int jobs) {
    if (const char* det = std::getenv("CMKV_DETERMINISTIC"); det && det[0] == '1') return 1;
    if (jobs > 0) return jobs;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

struct CommonFlags {
    std::string model_path;
    double horizon = 1.0;
    double dt = 0.0;  // 0 = default 1e-3 * horizon
    std::string seed_text = "1";
    std::uint32_t reps = 1;
    int jobs = 0;
    std::string out_dir = "out";
    std::uint32_t grid_stride = 0;  // 0 = record endpoints only

    double resolved_dt() const { return dt > 0.0 ? dt : 1e-3 * horizon; }

    void add_to(CLI::App* cmd, bool with_model = true) {
        if (with_model)
            cmd->add_option("--model", model_path, "model config file")->required();
        cmd->add_option("--t", horizon, "time horizon");
        cmd->add_option("--dt", dt, "step size (default 1e-3 * t)");
        cmd->add_option("--seed", seed_text, "root seed, decimal or 0x-hex");
        cmd->add_option("--reps", reps, "number of replications");
        cmd->add_option("--jobs", jobs, "worker threads over replications");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--grid-stride", grid_stride,
                        "record every k-th step (0: endpoints only)");
    }

    std::string flag_string() const {
        std::ostringstream ss;
        ss << "t=" << horizon << " dt=" << resolved_dt() << " seed=" << seed_text
           << " reps=" << reps << " stride=" << grid_stride;
        return ss.str();
    }
};

std::uint32_t resolve_stride(std::uint32_t stride, double horizon, double dt) {
    if (stride > 0) return stride;
    return static_cast<std::uint32_t>(std::llround(horizon / dt));
}

// ---- simulate finite ------------------------------------------------------

int cmd_simulate_finite(const CommonFlags& flags, std::uint32_t n_particles, bool jump_log) {
    RunContext ctx;
    ctx.module = "simulate finite";
    ctx.model_path = flags.model_path;
    ctx.model_text = read_file(flags.model_path);
    ctx.seed = parse_seed(flags.seed_text);
    ctx.out_dir = flags.out_dir;
    ctx.hash_config("finite n=" + std::to_string(n_particles) + " " + flags.flag_string());
    const auto model = build_model(ctx.model_text);

    FiniteSimConfig cfg;
    cfg.n_particles = n_particles;
    cfg.horizon = flags.horizon;
    cfg.dt = flags.resolved_dt();
    cfg.seed = ctx.seed;
    cfg.grid_stride = resolve_stride(flags.grid_stride, flags.horizon, cfg.dt);
    cfg.record_jump_log = jump_log;
    const int jobs = effective_jobs(flags.jobs);
    cfg.exec = (flags.reps == 1 && jobs != 1) ? Exec::openmp : Exec::serial;

    std::vector<TrajectoryBundle> bundles(flags.reps);
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic) num_threads(jobs) if (jobs > 1)
    for (std::uint32_t r = 0; r < flags.reps; ++r) {
        try {
            bundles[r] = simulate_finite(*model, cfg, r);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    for (std::uint32_t r = 0; r < flags.reps; ++r) {
        char name[64];
        std::snprintf(name, sizeof name, "rep_%04u.csv", r);
        auto out = ctx.open_output(name);
        write_states_csv(out, ctx, "finite", bundles[r], "particle_", r);
        if (jump_log) {
            std::snprintf(name, sizeof name, "rep_%04u_jumps.csv", r);
            auto jl = ctx.open_output(name);
            write_jump_log_csv(jl, ctx, bundles[r], r, -1);
        }
    }
    ctx.extra["model"] = model->name();
    ctx.extra["n"] = n_particles;
    ctx.write_manifest();
    return 0;
}

// ---- simulate limit -------------------------------------------------------

int cmd_simulate_limit(const CommonFlags& flags, std::uint32_t n_copies) {
    RunContext ctx;
    ctx.module = "simulate limit";
    ctx.model_path = flags.model_path;
    ctx.model_text = read_file(flags.model_path);
    ctx.seed = parse_seed(flags.seed_text);
    ctx.out_dir = flags.out_dir;
    ctx.hash_config("limit m=" + std::to_string(n_copies) + " " + flags.flag_string());
    const auto model = build_model(ctx.model_text);

    LimitSimConfig cfg;
    cfg.n_copies = n_copies;
    cfg.horizon = flags.horizon;
    cfg.dt = flags.resolved_dt();
    cfg.seed = ctx.seed;
    cfg.grid_stride = resolve_stride(flags.grid_stride, flags.horizon, cfg.dt);
    const int jobs = effective_jobs(flags.jobs);
    cfg.exec = (flags.reps == 1 && jobs != 1) ? Exec::openmp : Exec::serial;

    std::vector<TrajectoryBundle> bundles(flags.reps);
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic) num_threads(jobs) if (jobs > 1)
    for (std::uint32_t r = 0; r < flags.reps; ++r) {
        try {
            bundles[r] = simulate_limit(*model, cfg, r);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    for (std::uint32_t r = 0; r < flags.reps; ++r) {
        char name[64];
        std::snprintf(name, sizeof name, "rep_%04u.csv", r);
        auto out = ctx.open_output(name);
        write_states_csv(out, ctx, "limit", bundles[r], "copy_", r);
    }
    ctx.extra["model"] = model->name();
    ctx.extra["m"] = n_copies;
    ctx.extra["idio_path"] =
        limit_idio_path(*model) == IdioPath::collapsed ? "collapsed" : "panel";
    ctx.write_manifest();
    return 0;
}

// ---- simulate multipop ----------------------------------------------------

int cmd_simulate_multipop(const CommonFlags& flags, bool limit, bool jump_log) {
    RunContext ctx;
    ctx.module = limit ? "simulate multipop-limit" : "simulate multipop";
    ctx.model_path = flags.model_path;
    ctx.model_text = read_file(flags.model_path);
    ctx.seed = parse_seed(flags.seed_text);
    ctx.out_dir = flags.out_dir;
    ctx.hash_config(std::string("multipop ") + (limit ? "limit " : "finite ") +
                    flags.flag_string());
    const MultiPopSpec spec = build_multipop(ctx.model_text);

    MultiPopSimConfig cfg;
    cfg.horizon = flags.horizon;
    cfg.dt = flags.resolved_dt();
    cfg.seed = ctx.seed;
    cfg.grid_stride = resolve_stride(flags.grid_stride, flags.horizon, cfg.dt);
    cfg.record_jump_log = jump_log;
    const int jobs = effective_jobs(flags.jobs);
    cfg.exec = (flags.reps == 1 && jobs != 1) ? Exec::openmp : Exec::serial;

    std::vector<std::vector<TrajectoryBundle>> all(flags.reps);
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic) num_threads(jobs) if (jobs > 1)
    for (std::uint32_t r = 0; r < flags.reps; ++r) {
        try {
            all[r] = limit ? simulate_multipop_limit(spec, cfg, r)
                           : simulate_multipop_finite(spec, cfg, r);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    for (std::uint32_t r = 0; r < flags.reps; ++r)
        for (std::uint32_t k = 0; k < spec.n_pop(); ++k) {
            char name[64];
            std::snprintf(name, sizeof name, "rep_%04u_pop%u.csv", r, k + 1);
            auto out = ctx.open_output(name);
            write_states_csv(out, ctx, limit ? "multipop-limit" : "multipop-finite",
                             all[r][k], limit ? "copy_" : "particle_", r);
            if (jump_log && !limit) {
                std::snprintf(name, sizeof name, "rep_%04u_pop%u_jumps.csv", r, k + 1);
                auto jl = ctx.open_output(name);
                write_jump_log_csv(jl, ctx, all[r][k], r, static_cast<int>(k));
            }
        }
    ctx.extra["populations"] = spec.n_pop();
    ctx.write_manifest();
    return 0;
}

// ---- picard ---------------------------------------------------------------

int cmd_picard(const CommonFlags& flags, std::uint32_t n_copies, std::uint32_t iters) {
    RunContext ctx;
    ctx.module = "picard";
    ctx.model_path = flags.model_path;
    ctx.model_text = read_file(flags.model_path);
    ctx.seed = parse_seed(flags.seed_text);
    ctx.out_dir = flags.out_dir;
    ctx.hash_config("picard m=" + std::to_string(n_copies) + " iters=" +
                    std::to_string(iters) + " " + flags.flag_string());
    const auto model = build_model(ctx.model_text);

    LimitSimConfig cfg;
    cfg.n_copies = n_copies;
    cfg.horizon = flags.horizon;
    cfg.dt = flags.resolved_dt();
    cfg.seed = ctx.seed;
    cfg.grid_stride = resolve_stride(flags.grid_stride, flags.horizon, cfg.dt);
    const int jobs = effective_jobs(flags.jobs);
    cfg.exec = jobs != 1 ? Exec::openmp : Exec::serial;

    auto [bundle, report] = picard_solve(*model, cfg, iters);

    {
        auto out = ctx.open_output("gaps.csv");
        out << ctx.header("picard-gaps");
        out << "n,t,u\n";
        for (std::size_t n = 0; n < report.gap_paths.size(); ++n)
            for (std::size_t s = 0; s < report.gap_paths[n].size(); ++s)
                out << n << ',' << fmt_time(cfg.dt * static_cast<double>(s)) << ','
                    << fmt_value(report.gap_paths[n][s]) << "\n";
    }
    {
        auto out = ctx.open_output("picard_terminal.csv");
        write_states_csv(out, ctx, "picard", bundle, "copy_", 0);
    }
    ctx.extra["w2_vs_direct"] = report.w2_vs_direct;
    ctx.extra["gap_terminal"] = report.gap_terminal;
    ctx.write_manifest();
    std::printf("picard: %u iterations, terminal gap %.3e, W2 vs direct %.3e\n", iters,
                report.gap_terminal.back(), report.w2_vs_direct);
    return 0;
}

// ---- mgtest ----------------------------------------------------------------

int cmd_mgtest(const CommonFlags& flags, std::uint32_t n_copies, const std::string& g_name,
               double s_time, double t_time) {
    RunContext ctx;
    ctx.module = "mgtest";
    ctx.model_path = flags.model_path;
    ctx.model_text = read_file(flags.model_path);
    ctx.seed = parse_seed(flags.seed_text);
    ctx.out_dir = flags.out_dir;
    ctx.hash_config("mgtest g=" + g_name + " s=" + std::to_string(s_time) + " " +
                    flags.flag_string());
    const auto model = build_model(ctx.model_text);
    const TestFunction2D g = TestFunction2D::builtin(g_name);

    LimitSimConfig cfg;
    cfg.n_copies = n_copies;
    cfg.horizon = flags.horizon;
    cfg.dt = flags.resolved_dt();
    cfg.seed = ctx.seed;
    const double t_end = t_time > 0.0 ? t_time : flags.horizon;
    const MeanStderr r = martingale_residual(*model, g, s_time, t_end, cfg, flags.reps);
    const bool pass = std::abs(r.mean) <= 4.0 * r.stderr_ + 1e-15;

    {
        auto out = ctx.open_output("mgtest.csv");
        out << ctx.header("mgtest");
        out << "g,mean,stderr,reps,pass\n";
        out << g_name << ',' << fmt_value(r.mean) << ',' << fmt_value(r.stderr_) << ','
            << flags.reps << ',' << (pass ? "1" : "0") << "\n";
    }
    ctx.extra["g"] = g_name;
    ctx.extra["mean"] = r.mean;
    ctx.extra["stderr"] = r.stderr_;
    ctx.write_manifest();
    std::printf("mgtest g=%s: mean=%.6e stderr=%.6e -> %s\n", g_name.c_str(), r.mean,
                r.stderr_, pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

// ---- studies ----------------------------------------------------------------

int cmd_study_convergence(const CommonFlags& flags, const std::string& n_list_text,
                          std::uint32_t m_limit) {
    RunContext ctx;
    ctx.module = "study convergence";
    ctx.model_path = flags.model_path;
    ctx.model_text = read_file(flags.model_path);
    ctx.seed = parse_seed(flags.seed_text);
    ctx.out_dir = flags.out_dir;
    ctx.hash_config("convergence n=" + n_list_text + " mlimit=" + std::to_string(m_limit) +
                    " " + flags.flag_string());
    const auto model = build_model(ctx.model_text);

    std::vector<std::uint32_t> n_list;
    std::stringstream ss(n_list_text);
    for (std::string item; std::getline(ss, item, ',');)
        n_list.push_back(static_cast<std::uint32_t>(std::stoul(item)));

    const auto rows = convergence_study(*model, n_list, m_limit, flags.horizon,
                                        flags.resolved_dt(), flags.reps, ctx.seed);
    auto out = ctx.open_output("convergence.csv");
    out << ctx.header("study-convergence");
    out << "N,median_w2,iqr,reps,seed\n";
    for (const auto& r : rows)
        out << r.n_particles << ',' << fmt_value(r.median_w2) << ',' << fmt_value(r.iqr)
            << ',' << r.reps << ',' << r.seed << "\n";
    ctx.write_manifest();
    return 0;
}

int cmd_study_covariation(const CommonFlags& flags, std::uint32_t n_particles) {
    RunContext ctx;
    ctx.module = "study covariation";
    ctx.model_path = flags.model_path;
    ctx.model_text = read_file(flags.model_path);
    ctx.seed = parse_seed(flags.seed_text);
    ctx.out_dir = flags.out_dir;
    ctx.hash_config("covariation n=" + std::to_string(n_particles) + " " +
                    flags.flag_string());
    const auto model = build_model(ctx.model_text);

    FiniteSimConfig cfg;
    cfg.n_particles = n_particles;
    cfg.horizon = flags.horizon;
    cfg.dt = flags.resolved_dt();
    cfg.seed = ctx.seed;
    cfg.record_jump_log = true;
    cfg.grid_stride = resolve_stride(flags.grid_stride, flags.horizon, cfg.dt);

    auto out = ctx.open_output("covariation.csv");
    out << ctx.header("study-covariation");
    out << "rep,pair,realized_T,theoretical_T\n";
    for (std::uint32_t r = 0; r < flags.reps; ++r) {
        const TrajectoryBundle b = simulate_finite(*model, cfg, r);
        const auto cross = estimate_covariation(*model, b, 0, 1);
        const auto self = estimate_covariation(*model, b, 0, 0);
        out << r << ",0-1," << fmt_value(cross.realized.back()) << ','
            << fmt_value(cross.theoretical.back()) << "\n";
        out << r << ",0-0," << fmt_value(self.realized.back()) << ','
            << fmt_value(self.theoretical.back()) << "\n";
    }
    ctx.write_manifest();
    return 0;
}

int cmd_study_moments(const CommonFlags& flags, const std::string& n_list_text) {
    RunContext ctx;
    ctx.module = "study moments";
    ctx.model_path = flags.model_path;
    ctx.model_text = read_file(flags.model_path);
    ctx.seed = parse_seed(flags.seed_text);
    ctx.out_dir = flags.out_dir;
    ctx.hash_config("moments n=" + n_list_text + " " + flags.flag_string());
    const auto model = build_model(ctx.model_text);

    std::vector<std::uint32_t> n_list;
    std::stringstream ss(n_list_text);
    for (std::string item; std::getline(ss, item, ',');)
        n_list.push_back(static_cast<std::uint32_t>(std::stoul(item)));

    const MomentAuditReport report = moment_audit_run(
        *model, n_list, flags.horizon, flags.resolved_dt(), flags.reps, ctx.seed);
    auto out = ctx.open_output("moments.csv");
    out << ctx.header("study-moments");
    out << "# spearman_rho=" << fmt_value(report.spearman_rho)
        << " p=" << fmt_value(report.p_value) << " pass=" << (report.pass ? 1 : 0) << "\n";
    out << "N,e_sup_sq,stderr,reps\n";
    for (const auto& r : report.rows)
        out << r.n_particles << ',' << fmt_value(r.e_sup_sq) << ',' << fmt_value(r.stderr_)
            << ',' << r.reps << "\n";
    ctx.extra["spearman_rho"] = report.spearman_rho;
    ctx.extra["p_value"] = report.p_value;
    ctx.extra["pass"] = report.pass;
    ctx.write_manifest();
    std::printf("moment audit: rho=%.3f p=%.3f -> %s\n", report.spearman_rho, report.p_value,
                report.pass ? "PASS" : "FAIL");
    return report.pass ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"conditional McKean-Vlasov particle systems"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::uint32_t n_particles = 50, n_copies = 100, iters = 8, m_limit = 1000;
    bool jump_log = false;
    std::string n_list = "25,50,100,200";
    std::string g_name = "y1";
    double s_time = 0.0, t_time = 0.0;

    auto* simulate = app.add_subcommand("simulate", "run a particle or limit system");
    simulate->require_subcommand(1);
    auto* fin = simulate->add_subcommand("finite", "N-particle jump-diffusion system");
    flags.add_to(fin);
    fin->add_option("--n", n_particles, "particle count")->required();
    fin->add_flag("--jump-log", jump_log, "record per-event receiver increments");
    auto* lim = simulate->add_subcommand("limit", "conditional McKean-Vlasov limit system");
    flags.add_to(lim);
    lim->add_option("--m", n_copies, "copy count")->required();
    auto* mpf = simulate->add_subcommand("multipop", "multi-population finite system");
    flags.add_to(mpf);
    mpf->add_flag("--jump-log", jump_log, "record per-event receiver increments");
    bool mp_limit = false;
    mpf->add_flag("--limit", mp_limit, "simulate the multi-population limit system");

    auto* pic = app.add_subcommand("picard", "Picard iteration of the limit system");
    flags.add_to(pic);
    pic->add_option("--m", n_copies, "copy count")->required();
    pic->add_option("--iters", iters, "iteration count");

    auto* mg = app.add_subcommand("mgtest", "martingale-problem residual test");
    flags.add_to(mg);
    mg->add_option("--m", n_copies, "copy count");
    mg->add_option("--g", g_name, "test function: constant|y1|y1y2|sin_cos");
    mg->add_option("--s", s_time, "interval start");
    mg->add_option("--t-end", t_time, "interval end (default: horizon)");

    auto* study = app.add_subcommand("study", "cross-system verification studies");
    study->require_subcommand(1);
    auto* conv = study->add_subcommand("convergence", "W2 of finite vs limit marginals");
    flags.add_to(conv);
    conv->add_option("--n-list", n_list, "comma-separated particle counts");
    conv->add_option("--m-limit", m_limit, "limit-system copy count");
    auto* cov = study->add_subcommand("covariation", "realized vs predicted covariation");
    flags.add_to(cov);
    cov->add_option("--n", n_particles, "particle count");
    auto* mom = study->add_subcommand("moments", "second-moment audit across N");
    flags.add_to(mom);
    mom->add_option("--n-list", n_list, "comma-separated particle counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (fin->parsed()) return cmd_simulate_finite(flags, n_particles, jump_log);
        if (lim->parsed()) return cmd_simulate_limit(flags, n_copies);
        if (mpf->parsed()) return cmd_simulate_multipop(flags, mp_limit, jump_log);
        if (pic->parsed()) return cmd_picard(flags, n_copies, iters);
        if (mg->parsed()) return cmd_mgtest(flags, n_copies, g_name, s_time, t_time);
        if (conv->parsed()) return cmd_study_convergence(flags, n_list, m_limit);
        if (cov->parsed()) return cmd_study_covariation(flags, n_particles);
        if (mom->parsed()) return cmd_study_moments(flags, n_list);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ExprError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return 3;
    } catch (const ModelError& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("cmkv");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cmkv
