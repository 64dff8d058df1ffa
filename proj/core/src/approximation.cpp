#include "pqlab/approximation.hpp"

#include "pqlab/error.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace pqlab {

namespace {

double bump(double t) { return std::abs(t) < 1.0 ? std::exp(1.0 / (t * t - 1.0)) : 0.0; }

struct GaussRule {
    std::array<double, 33> x{};
    std::array<double, 33> w{};
};

const GaussRule& gauss33() {
    static const GaussRule rule = [] {
        using G = boost::math::quadrature::gauss<double, 33>;
        const auto& a = G::abscissa();
        const auto& wt = G::weights();
        GaussRule r;
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < a.size(); ++i) {
            pts.emplace_back(a[i], wt[i]);
            if (a[i] != 0.0) pts.emplace_back(-a[i], wt[i]);
        }
        std::sort(pts.begin(), pts.end());
        for (std::size_t i = 0; i < 33; ++i) {
            r.x[i] = pts[i].first;
            r.w[i] = pts[i].second;
        }
        return r;
    }();
    return rule;
}

// Unsplit normalized weights phi(x_j) W_j / sum.
const std::array<double, 33>& kernel_weights() {
    static const std::array<double, 33> w = [] {
        const GaussRule& g = gauss33();
        std::array<double, 33> out{};
        double total = 0.0;
        for (int j = 0; j < 33; ++j) total += out[j] = bump(g.x[j]) * g.w[j];
        // symmetric normalization: pair the entries so the first moment cancels exactly
        for (int j = 0; j < 33; ++j) out[j] /= total;
        for (int j = 0; j < 16; ++j) out[32 - j] = out[j];
        return out;
    }();
    return w;
}

template <class Fn>
double monotone_root(Fn&& fn, double lo, double hi) {
    std::uintmax_t iters = 300;
    const double flo = fn(lo), fhi = fn(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    auto r = boost::math::tools::toms748_solve(fn, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
}

void require_convex(const Profile& prof, const char* stage) {
    if (!prof.is_convex(1e-9))
        throw DomainError(std::string("approximation stage ") + stage + ": non-convex intermediate (defect " +
                          std::to_string(prof.convexity_defect()) + ")");
}

} // namespace

Schedule ladder_schedule(int k, const Rational& m) {
    if (k < 2) throw DomainError("ladder: k must be at least 2");
    if (m <= 0) throw DomainError("ladder: m_k must be positive");
    return {Rational(1) / (Rational(k) * k * m), Rational(1, k - 1)};
}

double kernel_mass() {
    static const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(bump, -1.0, 1.0, 20, 1e-15);
    return mass;
}

double kernel_constant() { return 1.0 / kernel_mass(); }

// ---------------------------------------------------------------- LevelProfile

LevelProfile::LevelProfile(std::shared_ptr<const ScalarProfile> f, BlockConstants bc) : f_(std::move(f)), bc_(bc) {}

double LevelProfile::g(double t) const { return f_->value(t) - 0.5 * bc_.ell * std::pow(t, bc_.p); }

double LevelProfile::g_derivative(double t) const {
    if (t == 0.0) return 0.0;
    return f_->derivative(t) - 0.5 * bc_.ell * bc_.p * std::pow(t, bc_.p - 1.0);
}

double LevelProfile::G_k(double t) const {
    t = std::abs(t);
    return t <= bc_.t_k ? g(t) : bc_.k * t - bc_.gstar_k;
}

double LevelProfile::coercive(double t) const { return std::pow(std::abs(t), bc_.p) / bc_.c - bc_.c; }

double LevelProfile::G_tilde(double t) const { return std::max(G_k(t), coercive(t)); }

double LevelProfile::H(double t) const {
    t = std::abs(t);
    if (t > bc_.r_k) {
        const double r = bc_.r_k, p = bc_.p, c = bc_.c;
        return p / c * std::pow(r, p - 1.0) * t - (p - 1.0) / c * std::pow(r, p) - c;
    }
    return G_tilde(t);
}

double LevelProfile::H_derivative(double t) const {
    const double a = std::abs(t), sgn = t < 0.0 ? -1.0 : 1.0;
    const double p = bc_.p, c = bc_.c;
    if (a > bc_.r_k) return sgn * p / c * std::pow(bc_.r_k, p - 1.0);
    const double gk = G_k(a), co = coercive(a);
    if (gk >= co) return sgn * (a <= bc_.t_k ? g_derivative(a) : static_cast<double>(bc_.k));
    return sgn * p / c * std::pow(a, p - 1.0);
}

template <class Fn>
double LevelProfile::convolve(double t, Fn&& fn) const {
    const double d = bc_.delta;
    const GaussRule& g = gauss33();
    const double tau = (t - bc_.t_cross) / d;
    if (!(std::abs(tau) < 1.0)) {
        const auto& w = kernel_weights();
        double s = 0.0;
        for (int j = 0; j < 33; ++j) s += w[j] * fn(t - d * g.x[j]);
        return s;
    }
    // the kink of H sits inside the stencil: integrate each smooth piece separately
    double s = 0.0, mass = 0.0;
    const double pieces[2][2] = {{-1.0, tau}, {tau, 1.0}};
    for (const auto& pc : pieces) {
        const double half = 0.5 * (pc[1] - pc[0]), mid = 0.5 * (pc[1] + pc[0]);
        if (half <= 0.0) continue;
        for (int j = 0; j < 33; ++j) {
            const double x = mid + half * g.x[j];
            const double wj = bump(x) * g.w[j] * half;
            mass += wj;
            s += wj * fn(t - d * x);
        }
    }
    return s / mass;
}

double LevelProfile::mollified_H(double t) const {
    return convolve(t, [this](double x) { return H(x); });
}

double LevelProfile::mollified_H_derivative(double t) const {
    return convolve(t, [this](double x) { return H_derivative(x); });
}

double LevelProfile::value(double t) const {
    t = std::abs(t);
    return mollified_H(t) - bc_.mu + 0.5 * bc_.ell * std::pow(t, bc_.p);
}

double LevelProfile::derivative(double t) const {
    const double a = std::abs(t);
    if (a == 0.0) return 0.0;
    const double d = mollified_H_derivative(a) + 0.5 * bc_.ell * bc_.p * std::pow(a, bc_.p - 1.0);
    return t < 0.0 ? -d : d;
}

// ---------------------------------------------------------------- construction

double g_envelope_constant(const ScalarProfile& f, double ell, double p, double q) {
    std::vector<double> t, v;
    for (int i = 0; i <= 4000; ++i) t.push_back(0.005 * i);
    for (int j = 0; j <= 48; ++j) t.push_back(std::pow(10.0, 0.25 * j));
    v.reserve(t.size());
    for (double x : t) v.push_back(f.value(x) - 0.5 * ell * std::pow(x, p));
    return envelope_constant(t, v, p, q);
}

double RegularizationLevel::mollification_slack() const {
    double s = 0.0;
    for (const auto& b : blocks) s += b.constants.m_k * b.constants.delta;
    return s;
}

double RegularizationLevel::offset() const { return mu_k() * static_cast<double>(blocks.size()); }

std::shared_ptr<const BlockIntegrand> RegularizationLevel::integrand(int N, int n) const {
    std::vector<std::shared_ptr<const ScalarProfile>> prof;
    for (const auto& b : blocks) prof.push_back(b.profile);
    if (spec.radial()) return std::make_shared<BlockIntegrand>(N, n, false, std::move(prof));
    if (n != static_cast<int>(blocks.size())) throw DomainError("level integrand: column count does not match n");
    return std::make_shared<BlockIntegrand>(N, n, true, std::move(prof));
}

namespace {

LevelBlock build_block(std::shared_ptr<const ScalarProfile> f, double p, double q, double ell, int k, const LadderOptions& opt) {
    LevelBlock blk;
    BlockConstants bc;
    bc.p = p;
    bc.ell = ell;
    bc.k = k;
    bc.c = g_envelope_constant(*f, ell, p, q);
    if (!(bc.c > 0.0) || !std::isfinite(bc.c)) throw NumericError("approximation stage G: envelope constant not finite");

    // a provisional profile gives access to g, g' before the remaining constants exist
    LevelProfile probe(f, bc);
    {
        double hi = 1.0;
        while (probe.g_derivative(hi) < k) {
            hi *= 2.0;
            if (hi > 1e100) throw NumericError("approximation stage G_k: slope k not attained");
        }
        const Profile gcheck = Profile::sample(hi, 4097, [&](double t) { return probe.g(std::abs(t)); });
        require_convex(gcheck, "G");
        bc.t_k = monotone_root([&](double t) { return probe.g_derivative(t) - k; }, 0.0, hi);
    }
    bc.gstar_k = k * bc.t_k - probe.g(bc.t_k);

    LevelProfile scan(f, bc);
    const double step = opt.scan_step;
    long last_fail = -1;
    for (long i = 0;; ++i) {
        const double t = i * step;
        const bool wins = scan.coercive(t) >= scan.G_k(t);
        if (!wins) last_fail = i;
        else if (p / bc.c * std::pow(t, p - 1.0) >= k) break;
        if (i > 400000000L) throw NumericError("approximation stage r_k: scan did not terminate");
    }
    if (last_fail < 0) throw NumericError("approximation stage r_k: coercive branch wins at the origin");
    {
        const double a = last_fail * step, b = (last_fail + 1) * step;
        bc.t_cross = monotone_root([&](double t) { return scan.coercive(t) - scan.G_k(t); }, a, b);
    }
    bc.r_k = (last_fail + 1) * step + 1.0;
    bc.m_k = std::max(static_cast<double>(k), p / bc.c * std::pow(bc.r_k, p - 1.0));
    blk.m_exact = Rational(bc.m_k);
    const Schedule sch = ladder_schedule(k, blk.m_exact);
    blk.delta_exact = sch.delta;
    bc.delta = sch.delta.convert_to<double>();
    bc.mu = sch.mu.convert_to<double>();
    blk.constants = bc;
    blk.profile = std::make_shared<LevelProfile>(f, bc);

    if (opt.sampled_pipeline) {
        const LevelProfile& L = *blk.profile;
        const int m = opt.profile_m;
        const double TG = bc.t_k + std::max(1.0, 0.25 * bc.t_k);
        blk.G = Profile::sample(TG, m, [&](double t) { return L.g(std::abs(t)); }, "G");
        require_convex(blk.G, "G");
        blk.Gstar = conjugate_profile(blk.G, {static_cast<double>(k), m}, BoundaryPolicy::Reject);
        blk.Gstar.tag = "G*";
        const double T = bc.r_k + 2.0;
        blk.Gk = conjugate_profile(blk.Gstar, {T, m}, BoundaryPolicy::Allow);
        blk.Gk.tag = "G_k";
        require_convex(blk.Gk, "G_k");
        blk.Gtilde = blk.Gk;
        blk.Gtilde.tag = "G~_k";
        for (int i = 0; i < m; ++i) blk.Gtilde.values[i] = std::max(blk.Gk.values[i], L.coercive(blk.Gk.t(i)));
        require_convex(blk.Gtilde, "G~_k");
        int last = -1;
        for (int i = (m - 1) / 2; i < m; ++i)
            if (L.coercive(blk.Gk.t(i)) < blk.Gk.values[i]) last = i;
        blk.r_k_sampled = (last + 1 < m ? blk.Gk.t(last + 1) : T) + 1.0;
        blk.H = blk.Gtilde;
        blk.H.tag = "H_k";
        for (int i = 0; i < m; ++i) {
            const double t = std::abs(blk.H.t(i));
            if (t > bc.r_k) blk.H.values[i] = L.H(t);
        }
        require_convex(blk.H, "H_k");
        blk.Fk = Profile::sample(T, m, [&](double t) { return L.value(std::abs(t)); }, "F_k");
        require_convex(blk.Fk, "F_k");
    }
    return blk;
}

} // namespace

RegularizationLevel build_level(const IntegrandSpec& spec, int k, const LadderOptions& opt) {
    spec.validate(true);
    if (k < 2) throw DomainError("ladder: k must be at least 2");
    RegularizationLevel level;
    level.spec = spec;
    level.k = k;
    level.mu_exact = Rational(1, k - 1);
    if (spec.radial()) {
        level.blocks.push_back(build_block(std::make_shared<PowerSumProfile>(spec.profile()), spec.p, spec.q, spec.ell, k, opt));
    } else {
        for (int j = 0; j < spec.columns(); ++j) {
            const double qj = spec.col_b[j] > 0.0 ? std::max(2.0, spec.col_e[j]) : 2.0;
            level.blocks.push_back(build_block(std::make_shared<PowerSumProfile>(spec.profile(j)), spec.p, qj, spec.ell, k, opt));
        }
    }
    return level;
}

// ---------------------------------------------------------------- report

std::vector<MatrixPoint> probe_points(int N, int n, int count, std::uint64_t seed, double radius) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<MatrixPoint> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        MatrixPoint x = MatrixPoint::zeros(N, n);
        double s2 = 0.0;
        for (double& v : x.v) {
            v = gauss(rng);
            s2 += v * v;
        }
        const double r = radius * unif(rng) / std::sqrt(s2);
        for (double& v : x.v) v *= r;
        out.push_back(std::move(x));
    }
    return out;
}

MonotonicityReport ladder_report(const IntegrandSpec& spec, const std::vector<int>& k_list,
                                 const std::vector<MatrixPoint>& probes, const LadderOptions& opt) {
    if (k_list.empty()) throw DomainError("ladder_report: empty k list");
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        if (k_list[i] < 2) throw DomainError("ladder_report: every k must be at least 2");
        if (i > 0 && k_list[i] <= k_list[i - 1]) throw DomainError("ladder_report: k list must be strictly increasing");
    }
    if (probes.empty()) throw DomainError("ladder_report: empty probe set");
    const int N = probes.front().N, n = probes.front().n;
    LadderOptions lopt = opt;
    lopt.sampled_pipeline = false;
    auto F = make_integrand(spec, N, n);

    std::vector<double> fval(probes.size());
    std::vector<std::vector<double>> fgrad(probes.size(), std::vector<double>(static_cast<std::size_t>(N) * n));
    for (std::size_t i = 0; i < probes.size(); ++i) fval[i] = F->value_and_gradient(probes[i].v, fgrad[i]);

    MonotonicityReport rep;
    std::vector<double> prev;
    std::vector<double> grad(static_cast<std::size_t>(N) * n);
    for (std::size_t idx = 0; idx < k_list.size(); ++idx) {
        const RegularizationLevel level = build_level(spec, k_list[idx], lopt);
        auto Fk = level.integrand(N, n);
        std::vector<double> cur(probes.size());
        double above = 0.0, gap = 0.0, dev = 0.0;
        for (std::size_t i = 0; i < probes.size(); ++i) {
            cur[i] = Fk->value_and_gradient(probes[i].v, grad);
            above = std::max(above, cur[i] - fval[i]);
            if (probes[i].norm() <= 2.0) {
                gap = std::max(gap, fval[i] - cur[i]);
                double d2 = 0.0;
                for (std::size_t e = 0; e < grad.size(); ++e) d2 += (grad[e] - fgrad[i][e]) * (grad[e] - fgrad[i][e]);
                dev = std::max(dev, std::sqrt(d2));
            }
        }
        if (idx > 0) {
            double v = 0.0;
            for (std::size_t i = 0; i < probes.size(); ++i) v = std::max(v, prev[i] - cur[i]);
            rep.violation_next.back() = v;
        }
        rep.k.push_back(level.k);
        rep.violation_next.push_back(0.0);
        rep.violation_above.push_back(above);
        rep.sup_gap.push_back(gap);
        rep.derivative_dev.push_back(dev);
        rep.slack.push_back(level.mollification_slack());
        prev = std::move(cur);
    }
    return rep;
}

nlohmann::json to_json(const RegularizationLevel& level) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : level.blocks) {
        const auto& c = b.constants;
        blocks.push_back({{"c", c.c},
                          {"t_k", c.t_k},
                          {"gstar_k", c.gstar_k},
                          {"t_cross", c.t_cross},
                          {"r_k", c.r_k},
                          {"r_k_sampled", b.r_k_sampled},
                          {"m_k", c.m_k},
                          {"delta_k", c.delta},
                          {"m_k_exact", b.m_exact.str()},
                          {"delta_k_exact", b.delta_exact.str()}});
    }
    return {{"k", level.k}, {"mu_k", level.mu_k()}, {"mu_k_exact", level.mu_exact.str()}, {"blocks", blocks},
            {"spec", to_json(level.spec)}};
}

nlohmann::json to_json(const MonotonicityReport& r) {
    return {{"k", r.k},
            {"violation_next", r.violation_next},
            {"violation_above", r.violation_above},
            {"sup_gap", r.sup_gap},
            {"derivative_dev", r.derivative_dev},
            {"slack", r.slack}};
}

} // namespace pqlab
