#pragma once

// Network case, region partition and the operational time grid.

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cbmuc {

class CaseError : public std::runtime_error {
public:
    enum class Kind { Syntax, Reference, Domain, Partition };
    CaseError(Kind kind, int line, const std::string& what);
    Kind kind() const { return kind_; }
    int line() const { return line_; }

private:
    Kind kind_;
    int line_;
};

struct Bus {
    int id = 0;
    double demand = 0.0;  // MW, scaled by the daily profile
};

struct Line {
    int from = 0;
    int to = 0;
    double susceptance = 0.0;  // MW/rad
    double capacity = 0.0;     // MW
};

struct Generator {
    int id = 0;
    int bus = 0;
    double pmin = 0.0;
    double pmax = 0.0;
    double ramp = 0.0;  // MW per step
    int min_up = 1;     // steps
    int min_down = 1;
    int init_status = 0;  // 1 = on before the horizon
    int init_hold = 0;    // steps the initial status must still be held
    // cost data
    double commit_cost = 0.0;    // c, USD per committed step
    double dispatch_cost = 0.0;  // d, USD/MWh
    double startup_cost = 0.0;
    double shutdown_cost = 0.0;
    double preventive_cost = 0.0;  // omega_p
    double failure_cost = 0.0;     // omega_f
};

struct NetworkCase {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;

    int bus_index(int id) const;  // -1 when absent
    int generator_index(int id) const;
};

/// Parses the sectioned case format (BUS / BRANCH / GEN / COST).
NetworkCase parse_case(std::string_view text);
std::string serialize_case(const NetworkCase& c);
NetworkCase load_case(const std::string& path);

struct Region {
    int id = 0;
    std::vector<int> generators;  // generator indices
    std::vector<int> internal;    // bus ids, ascending
    std::vector<int> boundary;
    std::vector<int> foreign;
    std::vector<int> neighbors;   // region ids
    std::vector<int> lines;       // indices of lines with an owned endpoint
    std::vector<int> tie_lines;   // subset of `lines` crossing the region border
    std::map<int, std::vector<int>> bus_neighbors;  // b in U u V -> region ids

    std::vector<int> owned() const;       // internal + boundary, ascending
    std::vector<int> shared() const;      // boundary + foreign, ascending
    bool owns(int bus) const;
};

struct PartitionedCase {
    NetworkCase network;
    std::map<int, int> owner;   // bus id -> region id
    std::vector<Region> regions;  // ascending by id

    int region_index(int id) const;
    const Region& region(int id) const;
    /// Buses visible to both regions that `from` reports to `to`.
    std::vector<int> shared_with(int from, int to) const;
};

PartitionedCase parse_partition(std::string_view text, const NetworkCase& c);
PartitionedCase partition(const NetworkCase& c, const std::map<int, int>& owner);
PartitionedCase single_region(const NetworkCase& c);
/// Breadth-first growth from evenly spread seeds; deterministic.
PartitionedCase auto_partition(const NetworkCase& c, int regions);
PartitionedCase load_partition(const std::string& path, const NetworkCase& c);

struct TimeGrid {
    int epochs = 1;
    int days = 1;
    int steps_per_day = 1;  // CGD

    int steps() const { return days * steps_per_day; }
    int epoch_length() const { return steps() / epochs; }
    int epoch_begin(int m) const { return m * epoch_length(); }
    int epoch_of(int t) const { return t / epoch_length(); }
    void validate() const;
};

/// demand[bus index][t] = base demand * profile[t mod CGD].
std::vector<std::vector<double>> expand_demand(const NetworkCase& c, const TimeGrid& grid,
                                               const std::vector<double>& profile);

std::string read_file(const std::string& path);

}  // namespace cbmuc
