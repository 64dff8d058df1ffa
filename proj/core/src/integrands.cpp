#include "pqlab/integrands.hpp"

#include "pqlab/error.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace pqlab {

namespace {

// (mu^2 + t^2)^{e/2} <= kappa(e) (mu^e + t^e)
double kappa(double e) { return std::max(1.0, std::pow(2.0, e / 2.0 - 1.0)); }

double sq_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

void require_finite(std::span<const double> x, const char* what) {
    for (double v : x)
        if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite matrix entry");
}

} // namespace

double MatrixPoint::norm() const { return std::sqrt(sq_norm(v)); }

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// ---------------------------------------------------------------- profiles

double ScalarProfile::conjugate_argmax(double s) const {
    const double target = std::abs(s);
    if (target == 0.0) return 0.0;
    double hi = 1.0;
    while (derivative(hi) < target) {
        hi *= 2.0;
        if (hi > 1e150) throw NumericError("conjugate: slope " + std::to_string(target) + " not attained");
    }
    if (derivative(hi) == target) return hi;
    double lo = 0.0;
    std::uintmax_t iters = 300;
    auto fn = [&](double t) { return derivative(t) - target; };
    auto r = boost::math::tools::toms748_solve(fn, lo, hi, -target, derivative(hi) - target,
                                               boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
}

double ScalarProfile::conjugate(double s) const {
    const double t = conjugate_argmax(s);
    return std::abs(s) * t - value(t);
}

PowerSumProfile::PowerSumProfile(std::vector<PowerTerm> terms, double mu) : terms_(std::move(terms)), mu_(mu) {
    for (const auto& term : terms_)
        if (!(term.exponent > 1.0) || !(term.coef >= 0.0))
            throw DomainError("profile terms need exponent > 1 and nonnegative coefficient");
}

double PowerSumProfile::value(double t) const {
    const double w = mu_ * mu_ + t * t;
    double f = 0.0;
    for (const auto& term : terms_) {
        if (term.coef == 0.0) continue;
        f += term.coef * (term.exponent == 2.0 ? w : std::pow(w, 0.5 * term.exponent));
    }
    return f;
}

double PowerSumProfile::derivative(double t) const {
    if (t == 0.0) return 0.0;
    const double w = mu_ * mu_ + t * t;
    double d = 0.0;
    for (const auto& term : terms_) {
        if (term.coef == 0.0) continue;
        const double e = term.exponent;
        d += term.coef * e * (e == 2.0 ? t : std::pow(w, 0.5 * e - 1.0) * t);
    }
    return d;
}

double PowerSumProfile::conjugate(double s) const {
    if (pure_power()) {
        const double c = terms_[0].coef, e = terms_[0].exponent;
        if (c == 0.0) throw NumericError("conjugate of the zero profile is not finite");
        const double k = std::pow(c, -1.0 / (e - 1.0)) * (1.0 - 1.0 / e) * std::pow(e, -1.0 / (e - 1.0));
        return k * std::pow(std::abs(s), e / (e - 1.0));
    }
    return ScalarProfile::conjugate(s);
}

// ---------------------------------------------------------------- block integrand

BlockIntegrand::BlockIntegrand(int N, int n, bool by_column, std::vector<std::shared_ptr<const ScalarProfile>> profiles)
    : N_(N), n_(n), by_column_(by_column), profiles_(std::move(profiles)) {
    const std::size_t want = by_column ? static_cast<std::size_t>(n) : 1u;
    if (profiles_.size() != want) throw DomainError("BlockIntegrand: profile count does not match block structure");
}

double BlockIntegrand::value_and_gradient(std::span<const double> xi, std::span<double> grad) const {
    if (!by_column_) {
        const double t = std::sqrt(sq_norm(xi));
        const ScalarProfile& f = *profiles_[0];
        if (!grad.empty()) {
            const double scale = t > 0.0 ? f.derivative(t) / t : 0.0;
            for (std::size_t i = 0; i < xi.size(); ++i) grad[i] = scale * xi[i];
        }
        return f.value(t);
    }
    double total = 0.0;
    for (int j = 0; j < n_; ++j) {
        double s2 = 0.0;
        for (int r = 0; r < N_; ++r) s2 += xi[r * n_ + j] * xi[r * n_ + j];
        const double t = std::sqrt(s2);
        const ScalarProfile& f = *profiles_[j];
        total += f.value(t);
        if (!grad.empty()) {
            const double scale = t > 0.0 ? f.derivative(t) / t : 0.0;
            for (int r = 0; r < N_; ++r) grad[r * n_ + j] = scale * xi[r * n_ + j];
        }
    }
    return total;
}

double BlockIntegrand::conjugate(std::span<const double> zeta) const {
    if (!by_column_) return profiles_[0]->conjugate(std::sqrt(sq_norm(zeta)));
    double total = 0.0;
    for (int j = 0; j < n_; ++j) {
        double s2 = 0.0;
        for (int r = 0; r < N_; ++r) s2 += zeta[r * n_ + j] * zeta[r * n_ + j];
        total += profiles_[j]->conjugate(std::sqrt(s2));
    }
    return total;
}

// ---------------------------------------------------------------- specs

std::string to_string(IntegrandKind k) {
    switch (k) {
    case IntegrandKind::RadialPower: return "radial-power";
    case IntegrandKind::RadialPqSum: return "radial-pq-sum";
    case IntegrandKind::SeparableAnisotropic: return "separable-anisotropic";
    case IntegrandKind::Quadratic: return "quadratic";
    }
    return "unknown";
}

IntegrandKind kind_from_string(const std::string& s) {
    if (s == "radial-power") return IntegrandKind::RadialPower;
    if (s == "radial-pq-sum") return IntegrandKind::RadialPqSum;
    if (s == "separable-anisotropic") return IntegrandKind::SeparableAnisotropic;
    if (s == "quadratic") return IntegrandKind::Quadratic;
    throw DomainError("unknown integrand kind '" + s + "'");
}

IntegrandSpec IntegrandSpec::radial_power(double p, double coef, double mu) {
    IntegrandSpec s;
    s.kind = IntegrandKind::RadialPower;
    s.p = s.q = p;
    s.coef = coef;
    s.mu = mu;
    s.ell = s.certified_ell();
    s.L = s.certified_L();
    return s;
}

IntegrandSpec IntegrandSpec::radial_pq_sum(double p, double q, double a, double b, double mu) {
    IntegrandSpec s;
    s.kind = IntegrandKind::RadialPqSum;
    s.p = p;
    s.q = q;
    s.a = a;
    s.b = b;
    s.mu = mu;
    s.ell = s.certified_ell();
    s.L = s.certified_L();
    return s;
}

IntegrandSpec IntegrandSpec::quadratic(double a) {
    IntegrandSpec s;
    s.kind = IntegrandKind::Quadratic;
    s.p = s.q = 2.0;
    s.a = a;
    s.ell = s.certified_ell();
    s.L = s.certified_L();
    return s;
}

IntegrandSpec IntegrandSpec::separable(std::vector<double> a, std::vector<double> b, std::vector<double> e, double mu) {
    IntegrandSpec s;
    s.kind = IntegrandKind::SeparableAnisotropic;
    s.p = 2.0;
    s.q = 2.0;
    for (std::size_t j = 0; j < b.size() && j < e.size(); ++j)
        if (b[j] > 0.0) s.q = std::max(s.q, e[j]);
    s.col_a = std::move(a);
    s.col_b = std::move(b);
    s.col_e = std::move(e);
    s.mu = mu;
    s.ell = s.certified_ell();
    s.L = s.certified_L();
    return s;
}

double IntegrandSpec::certified_ell() const {
    switch (kind) {
    case IntegrandKind::RadialPower: return coef;
    case IntegrandKind::RadialPqSum: return a;
    case IntegrandKind::Quadratic: return a;
    case IntegrandKind::SeparableAnisotropic:
        return col_a.empty() ? 0.0 : *std::min_element(col_a.begin(), col_a.end());
    }
    return 0.0;
}

double IntegrandSpec::certified_L() const {
    switch (kind) {
    case IntegrandKind::RadialPower: return coef * kappa(p) * (1.0 + std::pow(mu, p));
    case IntegrandKind::RadialPqSum:
        return a * kappa(p) * (1.0 + std::pow(mu, p)) + b * kappa(q) * (1.0 + std::pow(mu, q));
    case IntegrandKind::Quadratic: return a;
    case IntegrandKind::SeparableAnisotropic: {
        double L = 0.0;
        for (std::size_t j = 0; j < col_a.size(); ++j) {
            L += col_a[j] * (1.0 + mu * mu);
            if (j < col_b.size() && j < col_e.size()) L += col_b[j] * kappa(col_e[j]) * (1.0 + std::pow(mu, col_e[j]));
        }
        return L;
    }
    }
    return 0.0;
}

void IntegrandSpec::validate(bool certified) const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(p) || !(p > 1.0)) throw DomainError("p must exceed 1");
    if (!finite(q) || !(q >= p)) throw DomainError("q must be at least p");
    if (!finite(ell) || !(ell > 0.0)) throw DomainError("ell must be positive");
    if (!finite(L) || !(L > 0.0)) throw DomainError("L must be positive");
    if (!finite(mu) || !(mu >= 0.0)) throw DomainError("mu must be nonnegative");
    switch (kind) {
    case IntegrandKind::RadialPower:
        if (!(coef > 0.0)) throw DomainError("coef must be positive");
        if (q != p) throw DomainError("radial-power requires q == p");
        break;
    case IntegrandKind::RadialPqSum:
        if (!(a >= 0.0) || !(b >= 0.0) || !(a + b > 0.0)) throw DomainError("radial-pq-sum needs a, b >= 0 and a + b > 0");
        break;
    case IntegrandKind::Quadratic:
        if (!(a > 0.0)) throw DomainError("quadratic coefficient a must be positive");
        if (p != 2.0 || q != 2.0) throw DomainError("quadratic requires p == q == 2");
        break;
    case IntegrandKind::SeparableAnisotropic: {
        if (col_a.empty() || col_a.size() != col_b.size() || col_a.size() != col_e.size())
            throw DomainError("separable-anisotropic needs equal-length a, b, e lists");
        if (p != 2.0) throw DomainError("separable-anisotropic requires p == 2");
        double qq = 2.0;
        for (std::size_t j = 0; j < col_a.size(); ++j) {
            if (!(col_a[j] > 0.0)) throw DomainError("separable a_j must be positive");
            if (!(col_b[j] >= 0.0)) throw DomainError("separable b_j must be nonnegative");
            if (!(col_e[j] > 1.0)) throw DomainError("separable e_j must exceed 1");
            if (col_b[j] > 0.0) qq = std::max(qq, col_e[j]);
        }
        if (q < qq) throw DomainError("q must be at least the largest column exponent");
        break;
    }
    }
    if (certified && ell > certified_ell() * (1.0 + 1e-12))
        throw DomainError("ell exceeds the certified convexity margin " + std::to_string(certified_ell()));
}

PowerSumProfile IntegrandSpec::profile(int column) const {
    switch (kind) {
    case IntegrandKind::RadialPower: return PowerSumProfile({{coef, p}}, mu);
    case IntegrandKind::RadialPqSum: {
        std::vector<PowerTerm> t;
        if (a > 0.0) t.push_back({a, p});
        if (b > 0.0) t.push_back({b, q});
        return PowerSumProfile(std::move(t), mu);
    }
    case IntegrandKind::Quadratic: return PowerSumProfile({{a, 2.0}}, 0.0);
    case IntegrandKind::SeparableAnisotropic: {
        if (column < 0 || column >= columns()) throw DomainError("separable profile: column out of range");
        std::vector<PowerTerm> t{{col_a[column], 2.0}};
        if (col_b[column] > 0.0) t.push_back({col_b[column], col_e[column]});
        return PowerSumProfile(std::move(t), mu);
    }
    }
    throw DomainError("unknown integrand kind");
}

std::shared_ptr<const BlockIntegrand> make_integrand(const IntegrandSpec& spec, int N, int n) {
    spec.validate(false);
    std::vector<std::shared_ptr<const ScalarProfile>> profiles;
    if (spec.radial()) {
        profiles.push_back(std::make_shared<PowerSumProfile>(spec.profile()));
        return std::make_shared<BlockIntegrand>(N, n, false, std::move(profiles));
    }
    if (n != spec.columns())
        throw DomainError("separable spec has " + std::to_string(spec.columns()) + " columns but n = " + std::to_string(n));
    for (int j = 0; j < n; ++j) profiles.push_back(std::make_shared<PowerSumProfile>(spec.profile(j)));
    return std::make_shared<BlockIntegrand>(N, n, true, std::move(profiles));
}

ValueDerivative evaluate_with_derivative(const IntegrandSpec& spec, const MatrixPoint& xi) {
    require_finite(xi.v, "evaluate_with_derivative");
    auto F = make_integrand(spec, xi.N, xi.n);
    ValueDerivative out{0.0, MatrixPoint::zeros(xi.N, xi.n)};
    out.value = F->value_and_gradient(xi.v, out.derivative.v);
    return out;
}

double bracket(const MatrixPoint& xi, double mu) { return std::sqrt(mu * mu + sq_norm(xi.v)); }

void v_function(std::span<const double> xi, double p, double mu, std::span<double> out) {
    const double w = mu * mu + sq_norm(xi);
    const double scale = (w == 0.0 || p == 2.0) ? 1.0 : std::pow(w, (p - 2.0) / 4.0);
    for (std::size_t i = 0; i < xi.size(); ++i) out[i] = scale * xi[i];
}

MatrixPoint v_function(const MatrixPoint& xi, double p, double mu) {
    if (!(p > 1.0)) throw DomainError("p must exceed 1");
    if (!(mu >= 0.0)) throw DomainError("mu must be nonnegative");
    MatrixPoint out = MatrixPoint::zeros(xi.N, xi.n);
    v_function(xi.v, p, mu, out.v);
    return out;
}

GrowthConstants growth_constants(const IntegrandSpec& spec) {
    switch (spec.kind) {
    case IntegrandKind::RadialPower: {
        const double c1 = spec.coef;
        return {c1, std::max(c1, spec.certified_L())};
    }
    case IntegrandKind::RadialPqSum: {
        const double c1 = spec.a + spec.b;
        return {c1, std::max({c1, spec.b, spec.certified_L()})};
    }
    case IntegrandKind::Quadratic: return {spec.a, spec.a};
    case IntegrandKind::SeparableAnisotropic: {
        const double c1 = spec.certified_ell();
        return {c1, std::max(c1, spec.certified_L())};
    }
    }
    throw DomainError("unknown integrand kind");
}

double envelope_constant(std::span<const double> t, std::span<const double> value, double p, double q) {
    double c = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double v = value[i];
        const double up = v / (std::pow(t[i], q) + 1.0);
        const double tp = std::pow(t[i], p);
        // (1/c) t^p - c <= v  <=>  c^2 + v c - t^p >= 0
        const double lo = 0.5 * (-v + std::sqrt(v * v + 4.0 * tp));
        c = std::max({c, up, lo});
    }
    return c;
}

// ---------------------------------------------------------------- hypothesis sampler

HypothesisReport check_hypotheses(const IntegrandSpec& spec, int sample_count, std::uint64_t seed, int N, int n) {
    if (sample_count < 100) throw DomainError("check_hypotheses: sample_count must be at least 100");
    spec.validate(false);
    if (!spec.radial()) n = spec.columns();
    auto F = make_integrand(spec, N, n);
    const int dim = N * n;
    const double p = spec.p, q = spec.q, ell = spec.ell, mu = spec.mu;
    const double mu3 = std::min(mu, 1.0);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    constexpr double scales[3] = {0.1, 1.0, 10.0};
    constexpr double shells[4] = {0.5, 1.0, 2.0, 5.0};
    auto draw = [&](int which, std::vector<double>& x) {
        for (double& v : x) v = gauss(rng);
        if (which < 3) {
            for (double& v : x) v *= scales[which];
        } else {
            const double r = std::sqrt(sq_norm(x));
            for (double& v : x) v *= shells[which - 3] / r;
        }
    };
    auto phi = [&](std::span<const double> x) { return F->value(x) - ell * std::pow(mu * mu + sq_norm(x), p / 2.0); };
    auto psi = [&](double t) { return 0.5 * ell * std::pow(t, p); };

    HypothesisReport rep;
    rep.sample_count = sample_count;
    rep.seed = seed;
    rep.v_sandwich_mu = mu3;
    rep.h2pp_ratio_min = std::numeric_limits<double>::infinity();
    rep.v_sandwich_ratio_min = std::numeric_limits<double>::infinity();
    rep.v_sandwich_ratio_max = 0.0;
    rep.bregman_v_constant = std::numeric_limits<double>::infinity();

    std::vector<double> xi(dim), eta(dim), mid(dim), gx(dim), ge(dim), vx(dim), ve(dim), v0x(dim), v0e(dim);
    std::vector<double> env_t, env_v;
    env_t.reserve(sample_count + 1);
    env_v.reserve(sample_count + 1);
    env_t.push_back(0.0);
    env_v.push_back(F->value(std::vector<double>(dim, 0.0)));

    double lip = 0.0, h1 = env_v[0];
    const double lip_const = std::pow(2.0, q) * spec.L;
    for (int i = 0; i < sample_count; ++i) {
        draw(i % 7, xi);
        draw((i + 3) % 7, eta);
        const double fx = F->value_and_gradient(xi, gx);
        F->value_and_gradient(eta, ge);
        const double tx = std::sqrt(sq_norm(xi)), te = std::sqrt(sq_norm(eta));

        h1 = std::max(h1, fx / (std::pow(tx, q) + 1.0));
        lip = std::max(lip, std::sqrt(sq_norm(gx)) / (lip_const * (std::pow(tx, q - 1.0) + 1.0)));
        env_t.push_back(tx);
        env_v.push_back(fx);

        for (int k = 0; k < dim; ++k) mid[k] = 0.5 * (xi[k] + eta[k]);
        const double px = phi(xi), pe = phi(eta);
        const double defect = phi(mid) - 0.5 * (px + pe);
        const double scale = std::abs(px) + std::abs(pe);
        if (defect > rep.h2_midpoint_violation) rep.h2_midpoint_violation = defect;
        if (defect > 1e-9 * (1.0 + scale)) rep.h2_flagged = true;

        double d2 = 0.0, mono = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double d = xi[k] - eta[k];
            d2 += d * d;
            mono += (gx[k] - ge[k]) * d;
        }
        if (d2 < 1e-24) continue;
        const double w = mu * mu + tx * tx + te * te;
        rep.h2pp_ratio_min = std::min(rep.h2pp_ratio_min, mono / (std::pow(w, (p - 2.0) / 2.0) * d2));

        v_function(xi, p, mu3, vx);
        v_function(eta, p, mu3, ve);
        double dv2 = 0.0;
        for (int k = 0; k < dim; ++k) dv2 += (vx[k] - ve[k]) * (vx[k] - ve[k]);
        const double w3 = mu3 * mu3 + tx * tx + te * te;
        const double ratio = dv2 / d2 / std::pow(w3, (p - 2.0) / 2.0);
        rep.v_sandwich_ratio_min = std::min(rep.v_sandwich_ratio_min, ratio);
        rep.v_sandwich_ratio_max = std::max(rep.v_sandwich_ratio_max, ratio);

        v_function(xi, p, 0.0, v0x);
        v_function(eta, p, 0.0, v0e);
        double dv02 = 0.0, pair = 0.0;
        const double gscale = te > 0.0 ? 0.5 * ell * p * std::pow(te, p - 2.0) : 0.0;
        for (int k = 0; k < dim; ++k) {
            dv02 += (v0x[k] - v0e[k]) * (v0x[k] - v0e[k]);
            pair += gscale * eta[k] * (xi[k] - eta[k]);
        }
        if (dv02 > 1e-24) rep.bregman_v_constant = std::min(rep.bregman_v_constant, (psi(tx) - psi(te) - pair) / dv02);
    }
    rep.h1_margin = h1;
    rep.h1_ok = h1 <= spec.L * (1.0 + 1e-12);
    rep.lipschitz_margin = lip;
    rep.v_sandwich_constant = std::max(rep.v_sandwich_ratio_max, 1.0 / rep.v_sandwich_ratio_min);

    const double c = envelope_constant(env_t, env_v, p, q);
    rep.envelope_c = c;
    rep.envelope_lower_margin = rep.envelope_upper_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < env_t.size(); ++i) {
        rep.envelope_lower_margin = std::min(rep.envelope_lower_margin, env_v[i] - (std::pow(env_t[i], p) / c - c));
        rep.envelope_upper_margin = std::min(rep.envelope_upper_margin, c * (std::pow(env_t[i], q) + 1.0) - env_v[i]);
    }
    return rep;
}

// ---------------------------------------------------------------- JSON

nlohmann::json to_json(const IntegrandSpec& s) {
    nlohmann::json j{{"kind", to_string(s.kind)}, {"p", s.p}, {"q", s.q}, {"ell", s.ell}, {"L", s.L}, {"mu", s.mu}};
    switch (s.kind) {
    case IntegrandKind::RadialPower: j["coef"] = s.coef; break;
    case IntegrandKind::RadialPqSum: j["a"] = s.a; j["b"] = s.b; break;
    case IntegrandKind::Quadratic: j["a"] = s.a; break;
    case IntegrandKind::SeparableAnisotropic: j["a"] = s.col_a; j["b"] = s.col_b; j["e"] = s.col_e; break;
    }
    return j;
}

IntegrandSpec spec_from_json(const nlohmann::json& j) {
    const IntegrandKind kind = kind_from_string(j.at("kind").get<std::string>());
    const double mu = j.value("mu", 0.0);
    IntegrandSpec s;
    switch (kind) {
    case IntegrandKind::RadialPower: s = IntegrandSpec::radial_power(j.at("p").get<double>(), j.value("coef", 1.0), mu); break;
    case IntegrandKind::RadialPqSum:
        s = IntegrandSpec::radial_pq_sum(j.at("p").get<double>(), j.at("q").get<double>(), j.value("a", 1.0), j.value("b", 1.0), mu);
        break;
    case IntegrandKind::Quadratic: s = IntegrandSpec::quadratic(j.value("a", 1.0)); break;
    case IntegrandKind::SeparableAnisotropic:
        s = IntegrandSpec::separable(j.at("a").get<std::vector<double>>(), j.at("b").get<std::vector<double>>(),
                                     j.at("e").get<std::vector<double>>(), mu);
        break;
    }
    if (j.contains("p") && kind != IntegrandKind::RadialPqSum) s.p = j.at("p").get<double>();
    if (j.contains("q")) s.q = j.at("q").get<double>();
    else if (kind == IntegrandKind::RadialPower) s.q = s.p;
    if (j.contains("ell")) s.ell = j.at("ell").get<double>();
    if (j.contains("L")) s.L = j.at("L").get<double>();
    s.validate(true);
    return s;
}

nlohmann::json to_json(const HypothesisReport& r) {
    return {{"h1_margin", r.h1_margin},
            {"h1_ok", r.h1_ok},
            {"h2_midpoint_violation", r.h2_midpoint_violation},
            {"h2_flagged", r.h2_flagged},
            {"h2pp_ratio_min", r.h2pp_ratio_min},
            {"lipschitz_margin", r.lipschitz_margin},
            {"envelope_c", r.envelope_c},
            {"envelope_lower_margin", r.envelope_lower_margin},
            {"envelope_upper_margin", r.envelope_upper_margin},
            {"v_sandwich_ratio_min", r.v_sandwich_ratio_min},
            {"v_sandwich_ratio_max", r.v_sandwich_ratio_max},
            {"v_sandwich_constant", r.v_sandwich_constant},
            {"v_sandwich_mu", r.v_sandwich_mu},
            {"bregman_v_constant", r.bregman_v_constant},
            {"sample_count", r.sample_count},
            {"seed", r.seed}};
}

} // namespace pqlab
