#include "pqlab/field_io.hpp"

#include "pqlab/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace pqlab {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

nlohmann::json lattice_to_json(const Lattice& lat) {
    return {{"n", lat.n}, {"N", lat.N}, {"lower", lat.lower}, {"upper", lat.upper}, {"nodes", lat.nodes}};
}

Lattice lattice_from_json(const nlohmann::json& j) {
    return Lattice::make(j.at("n").get<int>(), j.at("N").get<int>(), j.at("lower").get<std::array<double, 2>>(),
                         j.at("upper").get<std::array<double, 2>>(), j.at("nodes").get<std::array<int, 2>>());
}

void write_field_csv(std::ostream& os, const GridField& u) {
    const Lattice& lat = u.lattice;
    for (int i = 0; i < lat.node_count(); ++i) {
        Point x = lat.node_point(i);
        os << format_double(x[0]);
        if (lat.n == 2) os << ',' << format_double(x[1]);
        for (int r = 0; r < lat.N; ++r) os << ',' << format_double(u.at(i, r));
        os << '\n';
    }
}

void write_gradient_csv(std::ostream& os, const GradientField& w) {
    const Lattice& lat = w.lattice;
    for (int c = 0; c < lat.cell_count(); ++c) {
        Point x = lat.cell_center(c);
        os << format_double(x[0]);
        if (lat.n == 2) os << ',' << format_double(x[1]);
        for (double v : w.cell(c)) os << ',' << format_double(v);
        os << '\n';
    }
}

void save_field(const std::string& stem, const GridField& u) {
    std::ofstream csv(stem + ".csv");
    std::ofstream hdr(stem + ".json");
    if (!csv || !hdr) throw DomainError("save_field: cannot open output files for " + stem);
    write_field_csv(csv, u);
    nlohmann::json j{{"kind", "grid_field"}, {"lattice", lattice_to_json(u.lattice)}};
    hdr << j.dump(2) << '\n';
}

GridField load_field(const std::string& stem) {
    std::ifstream hdr(stem + ".json");
    std::ifstream csv(stem + ".csv");
    if (!hdr || !csv) throw DomainError("load_field: cannot open " + stem + ".{csv,json}");
    nlohmann::json j = nlohmann::json::parse(hdr);
    Lattice lat = lattice_from_json(j.at("lattice"));
    GridField u(lat);
    std::string line;
    int row = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        if (row >= lat.node_count()) throw DomainError("load_field: too many rows in " + stem + ".csv");
        std::istringstream ls(line);
        std::string cell;
        int col = 0;
        while (std::getline(ls, cell, ',')) {
            if (col >= lat.n) {
                double v = 0.0;
                auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (res.ec != std::errc{})
                    throw DomainError("load_field: bad number at row " + std::to_string(row + 1));
                if (col - lat.n >= lat.N) throw DomainError("load_field: too many columns at row " + std::to_string(row + 1));
                u.at(row, col - lat.n) = v;
            }
            ++col;
        }
        if (col != lat.n + lat.N) throw DomainError("load_field: wrong column count at row " + std::to_string(row + 1));
        ++row;
    }
    if (row != lat.node_count()) throw DomainError("load_field: expected " + std::to_string(lat.node_count()) + " rows");
    u.check_finite();
    return u;
}

} // namespace pqlab
