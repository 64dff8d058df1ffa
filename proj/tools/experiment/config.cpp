#include "config.hpp"

#include "pqlab/error.hpp"

#include <toml.hpp>

#include <cmath>
#include <numbers>
#include <fstream>
#include <sstream>

namespace pqlab::experiment {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw ConfigError("config", field, message);
}

nlohmann::json toml_to_json(const toml::node& node) {
    if (auto t = node.as_table()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
        return out;
    }
    if (auto a = node.as_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : *a) out.push_back(toml_to_json(v));
        return out;
    }
    if (auto v = node.as_string()) return v->get();
    if (auto v = node.as_integer()) return v->get();
    if (auto v = node.as_floating_point()) return v->get();
    if (auto v = node.as_boolean()) return v->get();
    throw ConfigError("config", "<document>", "dates and times are not supported");
}

const nlohmann::json* find(const nlohmann::json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double number(const nlohmann::json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(field, "must be finite");
    return v;
}

double number_or(const nlohmann::json& parent, const std::string& key, const std::string& field, double fallback) {
    const auto* v = find(parent, key);
    return v ? number(*v, field) : fallback;
}

int integer(const nlohmann::json& j, const std::string& field) {
    if (!j.is_number_integer()) fail(field, "expected an integer");
    return j.get<int>();
}

std::vector<double> numbers(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array()) fail(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<int> integers(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array()) fail(field, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(integer(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

std::array<double, 2> pair(const nlohmann::json& j, const std::string& field, int dim) {
    const auto v = numbers(j, field);
    if (static_cast<int>(v.size()) != dim) fail(field, "expected " + std::to_string(dim) + " entries");
    return {v[0], dim == 2 ? v[1] : 0.0};
}

const nlohmann::json& table(const nlohmann::json& j, const std::string& key) {
    const auto* t = find(j, key);
    if (!t) fail(key, "missing table");
    if (!t->is_object()) fail(key, "expected a table");
    return *t;
}

void reject_unknown(const nlohmann::json& j, const std::string& prefix, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) fail(prefix.empty() ? it.key() : prefix + "." + it.key(), "unknown key");
    }
}

bool power_of_two_plus_one(int nodes) {
    const int m = nodes - 1;
    return m >= 1 && (m & (m - 1)) == 0;
}

IntegrandSpec parse_integrand(const nlohmann::json& t) {
    reject_unknown(t, "integrand", {"kind", "p", "q", "a", "b", "coef", "mu", "col_a", "col_b", "col_e"});
    const auto* kind = find(t, "kind");
    if (!kind || !kind->is_string()) fail("integrand.kind", "expected a catalog name");
    IntegrandKind k;
    try {
        k = kind_from_string(kind->get<std::string>());
    } catch (const DomainError& e) {
        fail("integrand.kind", e.what());
    }
    const double mu = number_or(t, "mu", "integrand.mu", 0.0);
    IntegrandSpec spec;
    try {
        switch (k) {
        case IntegrandKind::Quadratic: spec = IntegrandSpec::quadratic(number_or(t, "a", "integrand.a", 1.0)); break;
        case IntegrandKind::RadialPower:
            spec = IntegrandSpec::radial_power(number_or(t, "p", "integrand.p", 2.0), number_or(t, "coef", "integrand.coef", 1.0), mu);
            break;
        case IntegrandKind::RadialPqSum:
            spec = IntegrandSpec::radial_pq_sum(number_or(t, "p", "integrand.p", 2.0), number_or(t, "q", "integrand.q", 4.0),
                                                number_or(t, "a", "integrand.a", 1.0), number_or(t, "b", "integrand.b", 1.0), mu);
            break;
        case IntegrandKind::SeparableAnisotropic: {
            auto col = [&](const char* key) {
                const auto* v = find(t, key);
                if (!v) fail(std::string("integrand.") + key, "required for separable-anisotropic");
                return numbers(*v, std::string("integrand.") + key);
            };
            spec = IntegrandSpec::separable(col("col_a"), col("col_b"), col("col_e"), mu);
            break;
        }
        }
        spec.validate(true);
    } catch (const DomainError& e) {
        fail("integrand", e.what());
    }
    return spec;
}

Datum parse_datum(const nlohmann::json& t, int dim) {
    reject_unknown(t, "datum", {"kind", "slope", "offset", "exponent", "center", "terms"});
    Datum d;
    const auto* kind = find(t, "kind");
    if (!kind || !kind->is_string()) fail("datum.kind", "expected affine, radial-power or oscillatory");
    const std::string k = kind->get<std::string>();
    if (k == "affine") d.kind = Datum::Kind::Affine;
    else if (k == "radial-power") d.kind = Datum::Kind::RadialPower;
    else if (k == "oscillatory") d.kind = Datum::Kind::Oscillatory;
    else fail("datum.kind", "unknown datum '" + k + "'");
    if (const auto* v = find(t, "slope")) d.slope = pair(*v, "datum.slope", dim);
    else if (d.kind != Datum::Kind::Affine) d.slope = {0.0, 0.0};
    d.offset = number_or(t, "offset", "datum.offset", 0.0);
    d.exponent = number_or(t, "exponent", "datum.exponent", 1.0);
    if (const auto* v = find(t, "center")) d.center = pair(*v, "datum.center", dim);
    if (const auto* v = find(t, "terms")) {
        if (d.kind != Datum::Kind::Oscillatory) fail("datum.terms", "only oscillatory data take terms");
        if (!v->is_array()) fail("datum.terms", "expected an array of tables");
        for (std::size_t i = 0; i < v->size(); ++i) {
            const std::string f = "datum.terms[" + std::to_string(i) + "]";
            const auto& term = (*v)[i];
            if (!term.is_object()) fail(f, "expected a table");
            reject_unknown(term, f, {"amplitude", "frequency", "phase"});
            OscillatoryTerm o;
            o.amplitude = number_or(term, "amplitude", f + ".amplitude", 0.0);
            if (const auto* fr = find(term, "frequency")) o.frequency = pair(*fr, f + ".frequency", dim);
            o.phase = number_or(term, "phase", f + ".phase", 0.0);
            d.terms.push_back(o);
        }
    }
    if (d.kind == Datum::Kind::Oscillatory && d.terms.empty()) fail("datum.terms", "oscillatory data need at least one term");
    return d;
}

} // namespace

double Datum::operator()(const Point& x) const {
    double v = offset + slope[0] * x[0] + slope[1] * x[1];
    switch (kind) {
    case Kind::Affine: break;
    case Kind::RadialPower:
        v += std::pow(std::hypot(x[0] - center[0], x[1] - center[1]), exponent);
        break;
    case Kind::Oscillatory:
        for (const auto& t : terms)
            v += t.amplitude * std::sin(std::numbers::pi * (t.frequency[0] * x[0] + t.frequency[1] * x[1]) + t.phase);
        break;
    }
    return v;
}

Lattice ExperimentConfig::lattice(int nodes) const {
    return Lattice::make(dimension, components, lower, upper, {nodes, dimension == 2 ? nodes : 1});
}

GridField ExperimentConfig::boundary(int nodes) const {
    return GridField::sample(lattice(nodes), [this](const Point& x, int) { return datum(x); });
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json d = {{"slope", datum.slope}, {"offset", datum.offset}};
    switch (datum.kind) {
    case Datum::Kind::Affine: d["kind"] = "affine"; break;
    case Datum::Kind::RadialPower:
        d["kind"] = "radial-power";
        d["exponent"] = datum.exponent;
        d["center"] = datum.center;
        break;
    case Datum::Kind::Oscillatory:
        d["kind"] = "oscillatory";
        d["terms"] = nlohmann::json::array();
        for (const auto& t : datum.terms)
            d["terms"].push_back({{"amplitude", t.amplitude}, {"frequency", t.frequency}, {"phase", t.phase}});
        break;
    }
    nlohmann::json j = {{"name", name},
                        {"seed", seed},
                        {"integrand", pqlab::to_json(integrand)},
                        {"datum", d},
                        {"lattice", {{"dimension", dimension}, {"components", components}, {"lower", lower}, {"upper", upper}, {"sizes", sizes}}},
                        {"scan", {{"r", r_list}}},
                        {"tolerances", {{"tol_el", tol_el}, {"tol_e", tol_e}, {"max_iter", max_iter}}},
                        {"hypotheses", {{"samples", hypothesis_samples}}},
                        {"output", {{"dir", output_dir}}}};
    if (!ladder_k.empty()) j["ladder"] = {{"k", ladder_k}};
    if (ball) j["ball"] = {{"center", ball->center}, {"radius", ball->radius}};
    if (!penalty_eps.empty())
        j["penalty"] = {{"eps", penalty_eps}, {"k_order", penalty_k_order}, {"mollify_eps", penalty_mollify}};
    return j;
}

nlohmann::json read_document(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("<file>", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (path.extension() == ".json") {
        try {
            return nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            fail("<document>", e.what());
        }
    }
    try {
        return toml_to_json(toml::parse(text, path.string()));
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e.description() << " at line " << e.source().begin.line;
        fail("<document>", msg.str());
    }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail("<document>", "expected a table at the top level");
    reject_unknown(j, "", {"name", "seed", "integrand", "datum", "lattice", "ladder", "ball", "scan", "penalty",
                           "tolerances", "hypotheses", "output"});
    ExperimentConfig c;
    if (const auto* v = find(j, "name")) {
        if (!v->is_string()) fail("name", "expected a string");
        c.name = v->get<std::string>();
    }
    if (const auto* v = find(j, "seed")) {
        if (!v->is_number_integer() || v->get<long long>() < 0) fail("seed", "expected a nonnegative integer");
        c.seed = v->get<std::uint64_t>();
    }

    const auto& lat = table(j, "lattice");
    reject_unknown(lat, "lattice", {"dimension", "components", "lower", "upper", "sizes"});
    if (const auto* v = find(lat, "dimension")) c.dimension = integer(*v, "lattice.dimension");
    if (c.dimension != 1 && c.dimension != 2) fail("lattice.dimension", "must be 1 or 2");
    if (const auto* v = find(lat, "components")) c.components = integer(*v, "lattice.components");
    if (c.components < 1) fail("lattice.components", "must be positive");
    if (const auto* v = find(lat, "lower")) c.lower = pair(*v, "lattice.lower", c.dimension);
    if (const auto* v = find(lat, "upper")) c.upper = pair(*v, "lattice.upper", c.dimension);
    for (int s = 0; s < c.dimension; ++s)
        if (!(c.upper[s] > c.lower[s])) fail("lattice.upper", "must exceed lattice.lower");
    const auto* sizes = find(lat, "sizes");
    if (!sizes) fail("lattice.sizes", "missing");
    c.sizes = integers(*sizes, "lattice.sizes");
    if (c.sizes.empty()) fail("lattice.sizes", "needs at least one size");
    for (std::size_t i = 0; i < c.sizes.size(); ++i) {
        if (!power_of_two_plus_one(c.sizes[i])) fail("lattice.sizes", "every size must be 2^m + 1 with m >= 1");
        if (i > 0 && c.sizes[i] <= c.sizes[i - 1]) fail("lattice.sizes", "sizes must be strictly increasing");
    }

    c.integrand = parse_integrand(table(j, "integrand"));
    if (c.integrand.kind == IntegrandKind::SeparableAnisotropic && c.integrand.columns() != c.dimension)
        fail("integrand.col_a", "separable integrands need one column per dimension");
    c.datum = parse_datum(table(j, "datum"), c.dimension);

    if (const auto* v = find(j, "ladder")) {
        reject_unknown(*v, "ladder", {"k"});
        const auto* k = find(*v, "k");
        if (!k) fail("ladder.k", "missing");
        c.ladder_k = integers(*k, "ladder.k");
        for (std::size_t i = 0; i < c.ladder_k.size(); ++i) {
            if (c.ladder_k[i] < 2) fail("ladder.k", "every k must be at least 2");
            if (i > 0 && c.ladder_k[i] <= c.ladder_k[i - 1]) fail("ladder.k", "k must be strictly increasing");
        }
    }
    if (const auto* v = find(j, "ball")) {
        reject_unknown(*v, "ball", {"center", "radius"});
        BallRegion b;
        const auto* center = find(*v, "center");
        if (!center) fail("ball.center", "missing");
        b.center = pair(*center, "ball.center", c.dimension);
        b.radius = number_or(*v, "radius", "ball.radius", -1.0);
        if (!(b.radius > 0.0)) fail("ball.radius", "must be positive");
        if (boundary_distance(c.lattice(c.sizes.front()), b) < 0.0) fail("ball", "ball must lie inside the domain");
        c.ball = b;
    }
    if (const auto* v = find(j, "scan")) {
        reject_unknown(*v, "scan", {"r"});
        if (const auto* r = find(*v, "r")) c.r_list = numbers(*r, "scan.r");
        if (c.r_list.empty()) fail("scan.r", "needs at least one exponent");
        for (double r : c.r_list)
            if (!(r >= 1.0)) fail("scan.r", "exponents must be at least 1");
    }
    if (const auto* v = find(j, "penalty")) {
        reject_unknown(*v, "penalty", {"eps", "k_order", "mollify_eps"});
        const auto* eps = find(*v, "eps");
        if (!eps) fail("penalty.eps", "missing");
        c.penalty_eps = numbers(*eps, "penalty.eps");
        if (c.penalty_eps.empty()) fail("penalty.eps", "needs at least one weight");
        for (double e : c.penalty_eps)
            if (!(e >= 0.0)) fail("penalty.eps", "weights must be nonnegative");
        if (const auto* k = find(*v, "k_order")) c.penalty_k_order = integer(*k, "penalty.k_order");
        if (c.penalty_k_order < 2) fail("penalty.k_order", "must be at least 2");
        c.penalty_mollify = number_or(*v, "mollify_eps", "penalty.mollify_eps", 0.0);
        if (c.penalty_mollify < 0.0) fail("penalty.mollify_eps", "must be nonnegative");
    }
    if (const auto* v = find(j, "tolerances")) {
        reject_unknown(*v, "tolerances", {"tol_el", "tol_e", "max_iter"});
        c.tol_el = number_or(*v, "tol_el", "tolerances.tol_el", c.tol_el);
        c.tol_e = number_or(*v, "tol_e", "tolerances.tol_e", c.tol_e);
        if (const auto* m = find(*v, "max_iter")) c.max_iter = integer(*m, "tolerances.max_iter");
        if (!(c.tol_el > 0.0)) fail("tolerances.tol_el", "must be positive");
        if (!(c.tol_e >= 0.0)) fail("tolerances.tol_e", "must be nonnegative");
        if (c.max_iter < 1) fail("tolerances.max_iter", "must be positive");
    }
    if (const auto* v = find(j, "hypotheses")) {
        reject_unknown(*v, "hypotheses", {"samples"});
        if (const auto* s = find(*v, "samples")) c.hypothesis_samples = integer(*s, "hypotheses.samples");
        if (c.hypothesis_samples < 100) fail("hypotheses.samples", "must be at least 100");
    }
    if (const auto* v = find(j, "output")) {
        reject_unknown(*v, "output", {"dir"});
        if (const auto* d = find(*v, "dir")) {
            if (!d->is_string()) fail("output.dir", "expected a string");
            c.output_dir = d->get<std::string>();
        }
    }
    if (c.output_dir.empty()) c.output_dir = "runs/" + c.name;
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return config_from_json(read_document(path)); }

} // namespace pqlab::experiment
