#pragma once

#include "pqlab/grid.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>

namespace pqlab {

nlohmann::json lattice_to_json(const Lattice& lat);
Lattice lattice_from_json(const nlohmann::json& j);

/// One row per node: coordinates, then components. Round-trip precision.
void write_field_csv(std::ostream& os, const GridField& u);
/// One row per cell: center coordinates, then the matrix entries row by row.
void write_gradient_csv(std::ostream& os, const GradientField& w);

/// Writes `<stem>.csv` and the lattice header `<stem>.json`.
void save_field(const std::string& stem, const GridField& u);
GridField load_field(const std::string& stem);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

} // namespace pqlab
