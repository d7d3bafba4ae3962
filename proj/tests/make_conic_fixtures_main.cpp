// Dumps the frozen conic cross-check instances as JSON in the solver's
// standard form (min c'x s.t. Ax = b, Gx + s = h, s in R_+^l x SOCs) so an
// independent solver can produce reference objectives.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "support/oracle_instances.hpp"

namespace {

nlohmann::json vec_to_json(const fedmimo::socp::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

nlohmann::json mat_to_json(const fedmimo::socp::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_conic_fixtures <output.json>\n";
        return 2;
    }

    nlohmann::json doc = nlohmann::json::array();
    for (const auto& inst : fedmimo::testsupport::conic_oracle_instances()) {
        const fedmimo::socp::Problem& p = inst.program.problem;
        nlohmann::json j;
        j["index"] = inst.index;
        j["c"] = vec_to_json(p.c);
        j["A"] = mat_to_json(p.A);
        j["b"] = vec_to_json(p.b);
        j["G"] = mat_to_json(p.G);
        j["h"] = vec_to_json(p.h);
        j["nonneg"] = p.dims.nonneg;
        j["soc"] = p.dims.soc;
        doc.push_back(std::move(j));
    }

    std::ofstream out(argv[1]);
    if (!out) {
        std::cerr << "cannot write " << argv[1] << "\n";
        return 1;
    }
    out << doc.dump() << "\n";
    std::cout << "wrote " << doc.size() << " instances to " << argv[1] << "\n";
    return 0;
}
