#pragma once

#include <string>
#include <vector>

#include "cbmuc/case_model.hpp"
#include "cbmuc/degradation.hpp"
#include "cbmuc/subproblem.hpp"

namespace fixture {

inline std::string data(const std::string& rel) { return std::string(CBMUC_DATA_DIR) + "/" + rel; }

struct Loaded {
    cbmuc::PartitionedCase pc;
    cbmuc::TimeGrid grid;
    std::vector<std::vector<double>> demand;  // [bus index][t]
    std::vector<std::vector<double>> omega;   // [generator index][m]

    cbmuc::RegionProblem region(int id) const {
        return cbmuc::make_region_problem(pc, id, grid, demand, omega);
    }
};

inline Loaded load(const std::string& dir, cbmuc::TimeGrid grid, const std::vector<double>& profile,
                   bool partitioned = true, double kappa = 1.0) {
    cbmuc::NetworkCase c = cbmuc::load_case(data(dir + "/case.txt"));
    Loaded l;
    l.pc = partitioned ? cbmuc::load_partition(data(dir + "/partition.txt"), c) : cbmuc::single_region(c);
    l.grid = grid;
    l.demand = cbmuc::expand_demand(c, grid, profile);
    auto rld = cbmuc::load_rld_spec(data(dir + "/rld.txt"));
    for (const auto& g : c.generators)
        l.omega.push_back(cbmuc::cost_curve(rld.at(g.id), kappa, g.preventive_cost, g.failure_cost, grid.epochs));
    return l;
}

}  // namespace fixture
