#pragma once
// Experiment configuration: TOML (or JSON) documents mapped onto solver inputs.

#include "pqlab/grid.hpp"
#include "pqlab/integrands.hpp"
#include "pqlab/regularity.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqlab::experiment {

/// Invalid configuration; what() reads "<stage>: <field>: <message>".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string stage, std::string field, const std::string& message)
        : std::runtime_error(stage + ": " + field + ": " + message), stage_(std::move(stage)), field_(std::move(field)) {}
    const std::string& stage() const { return stage_; }
    const std::string& field() const { return field_; }

private:
    std::string stage_, field_;
};

struct OscillatoryTerm {
    double amplitude = 0.0;
    std::array<double, 2> frequency{1.0, 0.0};
    double phase = 0.0;
};

/// Closed-form boundary data.
struct Datum {
    enum class Kind { Affine, RadialPower, Oscillatory };
    Kind kind = Kind::Affine;
    std::array<double, 2> slope{1.0, 0.0};
    double offset = 0.0;
    double exponent = 1.0;             // radial-power: |x - center|^exponent
    Point center{0.0, 0.0};
    std::vector<OscillatoryTerm> terms; // oscillatory: affine part + sum a sin(pi <f, x> + phase)

    double operator()(const Point& x) const;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 1;
    IntegrandSpec integrand;
    Datum datum;
    int dimension = 2;
    int components = 1;
    std::array<double, 2> lower{0.0, 0.0};
    std::array<double, 2> upper{1.0, 1.0};
    std::vector<int> sizes{33};          // nodes per axis, 2^m + 1, strictly increasing
    std::vector<int> ladder_k;
    std::optional<BallRegion> ball;
    std::vector<double> r_list{2.0};
    std::vector<double> penalty_eps;     // empty disables the penalty sweep
    int penalty_k_order = 2;
    double penalty_mollify = 0.0;
    double tol_el = 1e-8;
    double tol_e = 1e-12;
    int max_iter = 20000;
    int hypothesis_samples = 1000;
    std::string output_dir;

    Lattice lattice(int nodes) const;
    GridField boundary(int nodes) const;
    nlohmann::json to_json() const;
};

/// Parses by extension: .json as JSON, anything else as TOML.
nlohmann::json read_document(const std::filesystem::path& path);

/// Validates and converts; throws ConfigError naming the offending field.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

} // namespace pqlab::experiment
