#include "runner.hpp"

#include "pqlab/approximation.hpp"
#include "pqlab/dirichlet.hpp"
#include "pqlab/duality.hpp"
#include "pqlab/error.hpp"
#include "pqlab/field_io.hpp"
#include "pqlab/regularity.hpp"

#include <boost/version.hpp>
#include <openssl/evp.h>
#include <toml.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#ifndef PQLAB_VERSION_STRING
#define PQLAB_VERSION_STRING "unknown"
#endif

namespace pqlab::experiment {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("sha256: cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

bool RunManifest::ok() const {
    return std::all_of(stages.begin(), stages.end(), [](const StageRecord& s) { return s.status == "ok" || s.status == "skipped"; });
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json st = nlohmann::json::array(), art = nlohmann::json::array();
    for (const auto& s : stages)
        st.push_back({{"name", s.name}, {"status", s.status}, {"seconds", s.seconds}, {"message", s.message}});
    for (const auto& a : artifacts) art.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    return {{"verb", verb},       {"config_hash", config_hash}, {"config", config}, {"stages", st},
            {"artifacts", art},   {"versions", versions},       {"summary", summary}, {"ok", ok()}};
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opt) {
    if (opt.out) cfg.output_dir = opt.out->string();
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.tol_el) {
        if (!(*opt.tol_el > 0.0)) throw ConfigError("options", "--tol-el", "must be positive");
        cfg.tol_el = *opt.tol_el;
    }
    if (opt.threads < 1) throw ConfigError("options", "--threads", "must be at least 1");
    return cfg;
}

namespace {

constexpr const char* manifest_name = "manifest.json";

// Runs fn(i) for i < count on up to `threads` workers; rethrows the first failure in index order.
template <class Fn> void parallel_for(int count, int threads, Fn&& fn) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::min(threads, count);
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void prepare_directory(const fs::path& dir) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw ConfigError("output", "output.dir", "exists and is not a directory");
        if (!fs::is_empty(dir)) {
            if (!fs::exists(dir / manifest_name))
                throw ConfigError("output", "output.dir", "directory is not empty and holds no previous run");
            for (const auto& e : fs::directory_iterator(dir)) fs::remove_all(e.path());
        }
    }
    fs::create_directories(dir);
}

class RunContext {
public:
    RunContext(const ExperimentConfig& cfg, const RunOptions& opt, std::string verb)
        : cfg_(cfg), opt_(opt), dir_(cfg.output_dir) {
        prepare_directory(dir_);
        manifest_.verb = std::move(verb);
        manifest_.config = cfg.to_json();
        manifest_.config_hash = sha256_hex(manifest_.config.dump());
        manifest_.versions = {{"pqlab", PQLAB_VERSION_STRING},
                              {"boost", BOOST_LIB_VERSION},
                              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                              {"tomlplusplus", std::to_string(TOML_LIB_MAJOR) + "." + std::to_string(TOML_LIB_MINOR) + "." +
                                                   std::to_string(TOML_LIB_PATCH)},
                              {"compiler", __VERSION__}};
    }

    template <class Fn> void stage(const std::string& name, Fn&& fn) {
        StageRecord rec{name, "ok", 0.0, ""};
        if (failed_) {
            rec.status = "skipped";
            rec.message = "an earlier stage failed";
            manifest_.stages.push_back(rec);
            return;
        }
        if (opt_.progress) *opt_.progress << "[" << name << "] ..." << std::flush;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn(rec);
        } catch (const std::exception& e) {
            rec.status = "failed";
            rec.message = e.what();
            failed_ = true;
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (opt_.progress) *opt_.progress << " " << rec.status << (rec.message.empty() ? "" : ": " + rec.message) << "\n";
        manifest_.stages.push_back(rec);
    }

    void skip(const std::string& name, const std::string& why) { manifest_.stages.push_back({name, "skipped", 0.0, why}); }

    void write_text(const std::string& rel, const std::string& text) const {
        std::ofstream out(dir_ / rel, std::ios::binary);
        if (!out) throw NumericError("cannot write " + (dir_ / rel).string());
        out << text;
    }
    void write_json(const std::string& rel, const nlohmann::json& j) const { write_text(rel, j.dump(2) + "\n"); }

    RunManifest finish() {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(dir_))
            if (e.is_regular_file() && e.path().filename() != manifest_name) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files)
            manifest_.artifacts.push_back({fs::relative(f, dir_).generic_string(), sha256_file(f), fs::file_size(f)});
        write_json(manifest_name, manifest_.to_json());
        return manifest_;
    }

    const ExperimentConfig& cfg() const { return cfg_; }
    const RunOptions& opt() const { return opt_; }
    const fs::path& dir() const { return dir_; }
    nlohmann::json& summary() { return manifest_.summary; }

private:
    const ExperimentConfig& cfg_;
    const RunOptions& opt_;
    fs::path dir_;
    RunManifest manifest_;
    bool failed_ = false;
};

SolveOptions solve_options(const ExperimentConfig& cfg) {
    SolveOptions s;
    s.tol_el_rel = cfg.tol_el;
    s.tol_e = cfg.tol_e;
    s.max_iter = cfg.max_iter;
    return s;
}

std::string tag(int nodes) { return std::to_string(nodes); }

// Reference solves at every lattice size, in parallel across sizes.
std::vector<DiscreteMinimizer> solve_all(RunContext& ctx, StageRecord& rec) {
    const auto& cfg = ctx.cfg();
    const int count = static_cast<int>(cfg.sizes.size());
    std::vector<DiscreteMinimizer> sols(count);
    auto F = make_integrand(cfg.integrand, cfg.components, cfg.dimension);
    parallel_for(count, ctx.opt().threads, [&](int i) {
        const int nodes = cfg.sizes[i];
        std::ofstream log(ctx.dir() / ("solve_" + tag(nodes) + ".jsonl"), std::ios::binary);
        SolveOptions s = solve_options(cfg);
        s.log = &log;
        sols[i] = minimize(*F, cfg.boundary(nodes), s);
        save_field((ctx.dir() / ("solution_" + tag(nodes))).string(), sols[i].u);
    });
    nlohmann::json rows = nlohmann::json::array();
    bool all = true;
    for (int i = 0; i < count; ++i) {
        nlohmann::json j = to_json(sols[i]);
        j["nodes"] = cfg.sizes[i];
        rows.push_back(j);
        all = all && sols[i].converged;
    }
    ctx.write_json("solves.json", rows);
    ctx.summary()["solves"] = rows;
    if (!all) {
        rec.status = "not_converged";
        rec.message = "iteration cap reached before the tolerances were met";
    }
    return sols;
}

void scan_stage(RunContext& ctx, const std::vector<DiscreteMinimizer>& sols) {
    const auto& cfg = ctx.cfg();
    const ScanTable t = integrability_scan(sols, *cfg.ball, cfg.r_list);
    std::ostringstream csv;
    csv << "h,r,norm,slope\n";
    for (std::size_t k = 0; k < t.r.size(); ++k)
        for (const auto& row : t.rows)
            if (row.r == t.r[k])
                csv << format_double(row.h) << ',' << format_double(row.r) << ',' << format_double(row.norm) << ','
                    << format_double(t.slopes[k]) << '\n';
    ctx.write_text("scan.csv", csv.str());

    std::vector<GridField> levels;
    for (const auto& s : sols) levels.push_back(s.u);
    const VFieldTrend v = vfield_w12_estimate(levels, *cfg.ball, cfg.integrand.p, cfg.integrand.mu);
    ctx.write_json("vfield.json", to_json(v));

    std::ostringstream slopes;
    slopes << "r,slope\n";
    for (std::size_t k = 0; k < t.r.size(); ++k) slopes << format_double(t.r[k]) << ',' << format_double(t.slopes[k]) << '\n';
    ctx.write_text("slopes.csv", slopes.str());
    ctx.summary()["scan"] = to_json(t);
    ctx.summary()["vfield"] = to_json(v);
}

} // namespace

RunManifest run(const ExperimentConfig& cfg_in, const RunOptions& opt) {
    const ExperimentConfig cfg = apply_overrides(cfg_in, opt);
    RunContext ctx(cfg, opt, "run");
    ctx.write_json("config.json", cfg.to_json());

    ctx.stage("hypotheses", [&](StageRecord& rec) {
        const HypothesisReport h = check_hypotheses(cfg.integrand, cfg.hypothesis_samples, cfg.seed, cfg.components, cfg.dimension);
        ctx.write_json("hypotheses.json", to_json(h));
        ctx.summary()["hypotheses"] = {{"h1_ok", h.h1_ok}, {"h2_flagged", h.h2_flagged}};
        if (!h.h1_ok || h.h2_flagged) rec.message = "hypothesis check flagged the integrand";
    });

    if (cfg.ladder_k.empty()) {
        ctx.skip("ladder", "no ladder configured");
    } else {
        ctx.stage("ladder", [&](StageRecord&) {
            nlohmann::json levels = nlohmann::json::array();
            for (int k : cfg.ladder_k) levels.push_back(to_json(build_level(cfg.integrand, k)));
            const auto probes = probe_points(cfg.components, cfg.dimension, 1000, cfg.seed, 4.0);
            const MonotonicityReport rep = ladder_report(cfg.integrand, cfg.ladder_k, probes);
            ctx.write_json("ladder.json", {{"levels", levels}, {"monotonicity", to_json(rep)}});
        });
    }

    std::vector<DiscreteMinimizer> sols;
    ctx.stage("solves", [&](StageRecord& rec) {
        sols = solve_all(ctx, rec);
        if (!cfg.ladder_k.empty()) {
            const LadderSolution L = solve_ladder(cfg.integrand, cfg.boundary(cfg.sizes.back()), cfg.ladder_k, solve_options(cfg));
            nlohmann::json j = {{"nodes", cfg.sizes.back()},
                                {"k", L.k},
                                {"reference_energy", L.reference.energy},
                                {"energies", L.energies},
                                {"v_distances", L.v_distances},
                                {"w1p_distances", L.w1p_distances},
                                {"level_gaps", L.level_gaps},
                                {"converged", L.converged},
                                {"energies_nondecreasing", L.energies_nondecreasing}};
            nlohmann::json certs = nlohmann::json::array();
            for (std::size_t i = 0; i < L.k.size(); ++i) {
                const RegularizationLevel level = build_level(cfg.integrand, L.k[i], {.sampled_pipeline = false});
                certs.push_back(to_json(certificate(level, L.solutions[i].u, cfg.boundary(cfg.sizes.back()),
                                                    {.tol_el = L.solutions[i].tol_el, .scale = 1.0 + std::abs(L.energies[i])})));
            }
            j["certificates"] = certs;
            ctx.write_json("ladder_solution.json", j);
            ctx.summary()["ladder"] = {{"energies", L.energies}, {"converged", L.converged}};
            if (!L.converged) {
                rec.status = "not_converged";
                rec.message = "a ladder member did not converge";
            }
        }
    });

    ctx.stage("certificates", [&](StageRecord&) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < sols.size(); ++i) {
            const int nodes = cfg.sizes[i];
            const DualCertificate c = certificate(cfg.integrand, sols[i].u, cfg.boundary(nodes),
                                                  {.tol_el = sols[i].tol_el, .scale = 1.0 + std::abs(sols[i].energy)});
            nlohmann::json j = to_json(c);
            j["nodes"] = nodes;
            ctx.write_json("certificate_" + tag(nodes) + ".json", j);
            std::ostringstream csv;
            write_gap_csv(csv, sols[i].u.lattice, c.gap_field);
            ctx.write_text("gap_" + tag(nodes) + ".csv", csv.str());
            rows.push_back(j);
        }
        ctx.summary()["certificates"] = rows;
    });

    if (cfg.ball && cfg.sizes.size() >= 3) ctx.stage("scans", [&](StageRecord&) { scan_stage(ctx, sols); });
    else ctx.skip("scans", "needs a ball and at least 3 lattice sizes");

    if (cfg.penalty_eps.empty()) {
        ctx.skip("penalty", "no penalty sweep configured");
    } else {
        ctx.stage("penalty", [&](StageRecord& rec) {
            const int nodes = cfg.sizes.front();
            const GridField g = cfg.boundary(nodes);
            const int count = static_cast<int>(cfg.penalty_eps.size());
            std::vector<PenaltyResult> res(count);
            parallel_for(count, opt.threads, [&](int i) {
                res[i] = penalty_minimize(cfg.integrand, g,
                                          {.k_order = cfg.penalty_k_order, .eps_tilde = cfg.penalty_eps[i], .mollify_eps = cfg.penalty_mollify},
                                          solve_options(cfg));
            });
            std::ostringstream csv;
            csv << "nodes,eps,f_energy,penalty_share,total,el_residual,iterations,converged\n";
            bool all = true;
            for (int i = 0; i < count; ++i) {
                const auto& m = res[i].minimizer;
                csv << nodes << ',' << format_double(cfg.penalty_eps[i]) << ',' << format_double(res[i].f_energy) << ','
                    << format_double(res[i].penalty_share) << ',' << format_double(m.energy) << ','
                    << format_double(m.el_residual) << ',' << m.iterations << ',' << (m.converged ? 1 : 0) << '\n';
                all = all && m.converged;
            }
            ctx.write_text("penalty.csv", csv.str());
            if (!all) {
                rec.status = "not_converged";
                rec.message = "a penalty solve did not converge";
            }
        });
    }
    return ctx.finish();
}

RunManifest refinement_sweep(const ExperimentConfig& cfg_in, const RunOptions& opt) {
    const ExperimentConfig cfg = apply_overrides(cfg_in, opt);
    if (!cfg.ball) throw ConfigError("config", "ball", "ball required for sweep");
    if (cfg.sizes.size() < 3) throw ConfigError("config", "lattice.sizes", "sweep needs at least 3 lattice sizes");
    RunContext ctx(cfg, opt, "sweep");
    ctx.write_json("config.json", cfg.to_json());
    std::vector<DiscreteMinimizer> sols;
    ctx.stage("solves", [&](StageRecord& rec) { sols = solve_all(ctx, rec); });
    ctx.stage("scans", [&](StageRecord&) { scan_stage(ctx, sols); });
    return ctx.finish();
}

int report(const fs::path& manifest_path, std::ostream& os) {
    nlohmann::json m;
    try {
        std::ifstream in(manifest_path, std::ios::binary);
        if (!in) {
            os << "cannot open " << manifest_path.string() << "\n";
            return ConfigFailure;
        }
        m = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        os << "invalid manifest: " << e.what() << "\n";
        return ConfigFailure;
    }
    if (!m.contains("stages") || !m.contains("artifacts")) {
        os << "invalid manifest: stages or artifacts missing\n";
        return ConfigFailure;
    }
    const fs::path dir = manifest_path.parent_path();
    os << "verb: " << m.value("verb", "?") << "\nconfig hash: " << m.value("config_hash", "?") << "\n";
    bool good = true;
    for (const auto& s : m["stages"]) {
        const std::string status = s.value("status", "?");
        os << "stage " << s.value("name", "?") << ": " << status;
        if (!s.value("message", "").empty()) os << " (" << s.value("message", "") << ")";
        os << "\n";
        good = good && (status == "ok" || status == "skipped");
    }
    int mismatches = 0;
    for (const auto& a : m["artifacts"]) {
        const fs::path p = dir / a.value("path", "");
        std::string actual;
        try {
            actual = sha256_file(p);
        } catch (const std::exception&) {
            actual = "missing";
        }
        if (actual != a.value("sha256", "")) {
            ++mismatches;
            os << "artifact " << a.value("path", "") << ": " << (actual == "missing" ? "missing" : "hash mismatch") << "\n";
        }
    }
    os << m["artifacts"].size() << " artifacts, " << mismatches << " failed verification\n";
    if (m.contains("summary") && m["summary"].contains("certificates"))
        for (const auto& c : m["summary"]["certificates"])
            os << "certificate " << c.value("nodes", 0) << ": duality_gap=" << c.value("duality_gap", 0.0)
               << " extremality_gap_max=" << c.value("extremality_gap_max", 0.0) << "\n";
    if (m.contains("summary") && m["summary"].contains("scan"))
        os << "scan slopes: " << m["summary"]["scan"]["slopes"].dump() << "\n";
    return good && mismatches == 0 ? Success : NumericFailure;
}

} // namespace pqlab::experiment
