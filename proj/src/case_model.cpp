#include "cbmuc/case_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace cbmuc {

CaseError::CaseError(Kind kind, int line, const std::string& what)
    : std::runtime_error(what), kind_(kind), line_(line) {}

namespace {

struct Token {
    std::string text;
    int column;
};

std::vector<Token> split(const std::string& line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
        i = j;
    }
    return out;
}

std::string strip_comment(std::string line) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    return line;
}

std::string where(int line, int col) {
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

double number(const Token& tok, int line) {
    char* end = nullptr;
    double v = std::strtod(tok.text.c_str(), &end);
    if (end == tok.text.c_str() || *end != '\0' || !std::isfinite(v))
        throw CaseError(CaseError::Kind::Syntax, line,
                        where(line, tok.column) + ": expected a number, got '" + tok.text + "'");
    return v;
}

int integer(const Token& tok, int line) {
    double v = number(tok, line);
    if (v != static_cast<int>(v))
        throw CaseError(CaseError::Kind::Syntax, line,
                        where(line, tok.column) + ": expected an integer, got '" + tok.text + "'");
    return static_cast<int>(v);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

int NetworkCase::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    return -1;
}

int NetworkCase::generator_index(int id) const {
    for (std::size_t i = 0; i < generators.size(); ++i)
        if (generators[i].id == id) return static_cast<int>(i);
    return -1;
}

NetworkCase parse_case(std::string_view text) {
    enum class Section { None, Bus, Branch, Gen, Cost };
    NetworkCase c;
    Section sec = Section::None;
    std::set<int> costed;
    std::vector<int> gen_line, line_line;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    bool any_section = false;
    auto domain = [](int line, const std::string& msg) {
        return CaseError(CaseError::Kind::Domain, line, "line " + std::to_string(line) + ": " + msg);
    };
    while (std::getline(in, raw)) {
        ++lineno;
        auto toks = split(strip_comment(raw));
        if (toks.empty()) continue;
        std::string head = toks[0].text;
        std::transform(head.begin(), head.end(), head.begin(), ::toupper);
        if (toks.size() == 1 && (head == "BUS" || head == "BRANCH" || head == "GEN" || head == "COST")) {
            sec = head == "BUS" ? Section::Bus
                  : head == "BRANCH" ? Section::Branch
                  : head == "GEN" ? Section::Gen
                                  : Section::Cost;
            any_section = true;
            continue;
        }
        auto arity = [&](std::size_t lo, std::size_t hi, const char* what) {
            if (toks.size() < lo || toks.size() > hi)
                throw CaseError(CaseError::Kind::Syntax, lineno,
                                where(lineno, toks[0].column) + ": " + what + " row expects " +
                                    std::to_string(lo) +
                                    (hi != lo ? "-" + std::to_string(hi) : std::string()) +
                                    " fields, got " + std::to_string(toks.size()));
        };
        switch (sec) {
        case Section::None:
            throw CaseError(CaseError::Kind::Syntax, lineno,
                            where(lineno, toks[0].column) + ": data outside any section");
        case Section::Bus: {
            arity(2, 2, "BUS");
            Bus b{integer(toks[0], lineno), number(toks[1], lineno)};
            if (c.bus_index(b.id) >= 0) throw domain(lineno, "duplicate bus " + std::to_string(b.id));
            if (b.demand < 0) throw domain(lineno, "negative demand at bus " + std::to_string(b.id));
            c.buses.push_back(b);
            break;
        }
        case Section::Branch: {
            arity(4, 4, "BRANCH");
            Line l{integer(toks[0], lineno), integer(toks[1], lineno), number(toks[2], lineno),
                   number(toks[3], lineno)};
            if (l.susceptance <= 0) throw domain(lineno, "susceptance must be positive");
            if (l.capacity <= 0) throw domain(lineno, "capacity must be positive");
            if (l.from == l.to) throw domain(lineno, "line connects a bus to itself");
            c.lines.push_back(l);
            line_line.push_back(lineno);
            break;
        }
        case Section::Gen: {
            arity(7, 9, "GEN");
            Generator g;
            g.id = integer(toks[0], lineno);
            g.bus = integer(toks[1], lineno);
            g.pmin = number(toks[2], lineno);
            g.pmax = number(toks[3], lineno);
            g.ramp = number(toks[4], lineno);
            g.min_up = integer(toks[5], lineno);
            g.min_down = integer(toks[6], lineno);
            if (toks.size() >= 8) g.init_status = integer(toks[7], lineno);
            if (toks.size() >= 9) g.init_hold = integer(toks[8], lineno);
            if (c.generator_index(g.id) >= 0)
                throw domain(lineno, "duplicate generator " + std::to_string(g.id));
            if (g.pmin < 0 || g.pmax < g.pmin) throw domain(lineno, "need 0 <= pmin <= pmax");
            if (g.ramp <= 0) throw domain(lineno, "ramp limit must be positive");
            if (g.min_up < 1 || g.min_down < 1) throw domain(lineno, "min up/down must be >= 1");
            if (g.init_status != 0 && g.init_status != 1) throw domain(lineno, "initial status must be 0 or 1");
            if (g.init_hold < 0) throw domain(lineno, "initial hold must be >= 0");
            c.generators.push_back(g);
            gen_line.push_back(lineno);
            break;
        }
        case Section::Cost: {
            arity(7, 7, "COST");
            int id = integer(toks[0], lineno);
            int gi = c.generator_index(id);
            if (gi < 0)
                throw CaseError(CaseError::Kind::Reference, lineno,
                                "line " + std::to_string(lineno) + ": unknown generator " + std::to_string(id));
            if (!costed.insert(id).second) throw domain(lineno, "duplicate cost row for generator " + std::to_string(id));
            Generator& g = c.generators[gi];
            g.commit_cost = number(toks[1], lineno);
            g.dispatch_cost = number(toks[2], lineno);
            g.startup_cost = number(toks[3], lineno);
            g.shutdown_cost = number(toks[4], lineno);
            g.preventive_cost = number(toks[5], lineno);
            g.failure_cost = number(toks[6], lineno);
            for (int k = 1; k <= 6; ++k)
                if (number(toks[k], lineno) < 0) throw domain(lineno, "negative cost");
            break;
        }
        }
    }
    if (!any_section || c.buses.empty())
        throw CaseError(CaseError::Kind::Syntax, lineno, "case has no BUS section or no buses");
    for (std::size_t k = 0; k < c.lines.size(); ++k) {
        for (int end : {c.lines[k].from, c.lines[k].to})
            if (c.bus_index(end) < 0)
                throw CaseError(CaseError::Kind::Reference, line_line[k],
                                "line " + std::to_string(line_line[k]) + ": branch references unknown bus " +
                                    std::to_string(end));
    }
    for (std::size_t k = 0; k < c.generators.size(); ++k) {
        if (c.bus_index(c.generators[k].bus) < 0)
            throw CaseError(CaseError::Kind::Reference, gen_line[k],
                            "line " + std::to_string(gen_line[k]) + ": generator references unknown bus " +
                                std::to_string(c.generators[k].bus));
        if (!costed.count(c.generators[k].id))
            throw CaseError(CaseError::Kind::Reference, gen_line[k],
                            "generator " + std::to_string(c.generators[k].id) + " has no COST row");
    }
    return c;
}

std::string serialize_case(const NetworkCase& c) {
    std::ostringstream out;
    out << "BUS\n";
    for (const Bus& b : c.buses) out << b.id << ' ' << fmt(b.demand) << '\n';
    out << "BRANCH\n";
    for (const Line& l : c.lines)
        out << l.from << ' ' << l.to << ' ' << fmt(l.susceptance) << ' ' << fmt(l.capacity) << '\n';
    out << "GEN\n";
    for (const Generator& g : c.generators)
        out << g.id << ' ' << g.bus << ' ' << fmt(g.pmin) << ' ' << fmt(g.pmax) << ' ' << fmt(g.ramp)
            << ' ' << g.min_up << ' ' << g.min_down << ' ' << g.init_status << ' ' << g.init_hold << '\n';
    out << "COST\n";
    for (const Generator& g : c.generators)
        out << g.id << ' ' << fmt(g.commit_cost) << ' ' << fmt(g.dispatch_cost) << ' '
            << fmt(g.startup_cost) << ' ' << fmt(g.shutdown_cost) << ' ' << fmt(g.preventive_cost)
            << ' ' << fmt(g.failure_cost) << '\n';
    return out.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

NetworkCase load_case(const std::string& path) { return parse_case(read_file(path)); }

std::vector<int> Region::owned() const {
    std::vector<int> v = internal;
    v.insert(v.end(), boundary.begin(), boundary.end());
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<int> Region::shared() const {
    std::vector<int> v = boundary;
    v.insert(v.end(), foreign.begin(), foreign.end());
    std::sort(v.begin(), v.end());
    return v;
}

bool Region::owns(int bus) const {
    return std::binary_search(internal.begin(), internal.end(), bus) ||
           std::binary_search(boundary.begin(), boundary.end(), bus);
}

int PartitionedCase::region_index(int id) const {
    for (std::size_t i = 0; i < regions.size(); ++i)
        if (regions[i].id == id) return static_cast<int>(i);
    return -1;
}

const Region& PartitionedCase::region(int id) const {
    int k = region_index(id);
    if (k < 0) throw std::out_of_range("unknown region " + std::to_string(id));
    return regions[k];
}

std::vector<int> PartitionedCase::shared_with(int from, int to) const {
    const Region& a = region(from);
    const Region& b = region(to);
    std::vector<int> out;
    for (int u : a.foreign)
        if (std::binary_search(b.boundary.begin(), b.boundary.end(), u)) out.push_back(u);
    for (int u : a.boundary)
        if (std::binary_search(b.foreign.begin(), b.foreign.end(), u)) out.push_back(u);
    std::sort(out.begin(), out.end());
    return out;
}

PartitionedCase partition(const NetworkCase& c, const std::map<int, int>& owner) {
    for (const Bus& b : c.buses)
        if (!owner.count(b.id))
            throw CaseError(CaseError::Kind::Partition, 0, "bus " + std::to_string(b.id) + " is not assigned to a region");
    for (const auto& [bus, reg] : owner)
        if (c.bus_index(bus) < 0)
            throw CaseError(CaseError::Kind::Partition, 0, "partition names unknown bus " + std::to_string(bus));
    PartitionedCase p;
    p.network = c;
    p.owner = owner;
    std::set<int> ids;
    for (const auto& [bus, reg] : owner) ids.insert(reg);
    for (int id : ids) {
        Region r;
        r.id = id;
        p.regions.push_back(r);
    }
    std::vector<std::set<int>> boundary(ids.size()), foreign(ids.size()), neighbors(ids.size());
    for (std::size_t k = 0; k < c.lines.size(); ++k) {
        const Line& l = c.lines[k];
        int ra = p.region_index(owner.at(l.from));
        int rb = p.region_index(owner.at(l.to));
        p.regions[ra].lines.push_back(static_cast<int>(k));
        if (ra == rb) continue;
        p.regions[rb].lines.push_back(static_cast<int>(k));
        p.regions[ra].tie_lines.push_back(static_cast<int>(k));
        p.regions[rb].tie_lines.push_back(static_cast<int>(k));
        boundary[ra].insert(l.from);
        foreign[ra].insert(l.to);
        boundary[rb].insert(l.to);
        foreign[rb].insert(l.from);
        neighbors[ra].insert(p.regions[rb].id);
        neighbors[rb].insert(p.regions[ra].id);
    }
    for (std::size_t i = 0; i < p.regions.size(); ++i) {
        Region& r = p.regions[i];
        r.boundary.assign(boundary[i].begin(), boundary[i].end());
        r.foreign.assign(foreign[i].begin(), foreign[i].end());
        r.neighbors.assign(neighbors[i].begin(), neighbors[i].end());
        for (const Bus& b : c.buses)
            if (owner.at(b.id) == r.id && !boundary[i].count(b.id)) r.internal.push_back(b.id);
        std::sort(r.internal.begin(), r.internal.end());
        for (std::size_t g = 0; g < c.generators.size(); ++g)
            if (owner.at(c.generators[g].bus) == r.id) r.generators.push_back(static_cast<int>(g));
    }
    // neighbour sets per shared bus
    for (std::size_t i = 0; i < p.regions.size(); ++i) {
        Region& r = p.regions[i];
        for (int u : r.boundary) {
            std::vector<int> who;
            for (std::size_t j = 0; j < p.regions.size(); ++j)
                if (j != i && foreign[j].count(u)) who.push_back(p.regions[j].id);
            r.bus_neighbors[u] = who;
        }
        for (int v : r.foreign) r.bus_neighbors[v] = {owner.at(v)};
    }
    return p;
}

PartitionedCase parse_partition(std::string_view text, const NetworkCase& c) {
    std::map<int, int> owner;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto toks = split(strip_comment(raw));
        if (toks.empty()) continue;
        if (toks.size() != 2)
            throw CaseError(CaseError::Kind::Syntax, lineno,
                            where(lineno, toks[0].column) + ": expected 'bus_id region_id'");
        int bus = integer(toks[0], lineno);
        int reg = integer(toks[1], lineno);
        if (c.bus_index(bus) < 0)
            throw CaseError(CaseError::Kind::Partition, lineno,
                            "line " + std::to_string(lineno) + ": unknown bus " + std::to_string(bus));
        auto [it, fresh] = owner.emplace(bus, reg);
        if (!fresh && it->second != reg)
            throw CaseError(CaseError::Kind::Partition, lineno,
                            "line " + std::to_string(lineno) + ": bus " + std::to_string(bus) +
                                " assigned to two regions");
    }
    return partition(c, owner);
}

PartitionedCase load_partition(const std::string& path, const NetworkCase& c) {
    return parse_partition(read_file(path), c);
}

PartitionedCase single_region(const NetworkCase& c) {
    std::map<int, int> owner;
    for (const Bus& b : c.buses) owner[b.id] = 1;
    return partition(c, owner);
}

PartitionedCase auto_partition(const NetworkCase& c, int regions) {
    const int n = static_cast<int>(c.buses.size());
    if (regions < 1 || regions > n)
        throw CaseError(CaseError::Kind::Partition, 0, "cannot split " + std::to_string(n) + " buses into " +
                                                           std::to_string(regions) + " regions");
    std::vector<std::vector<int>> adj(n);
    for (const Line& l : c.lines) {
        int a = c.bus_index(l.from), b = c.bus_index(l.to);
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& v : adj) std::sort(v.begin(), v.end());
    std::vector<int> label(n, -1);
    std::vector<std::queue<int>> frontier(regions);
    for (int r = 0; r < regions; ++r) {
        int seed = static_cast<int>(static_cast<long>(r) * n / regions);
        label[seed] = r;
        frontier[r].push(seed);
    }
    // grow one bus per region per sweep so region sizes stay balanced
    bool grew = true;
    while (grew) {
        grew = false;
        for (int r = 0; r < regions; ++r) {
            while (!frontier[r].empty()) {
                int u = frontier[r].front();
                int pick = -1;
                for (int v : adj[u])
                    if (label[v] < 0) {
                        pick = v;
                        break;
                    }
                if (pick < 0) {
                    frontier[r].pop();
                    continue;
                }
                label[pick] = r;
                frontier[r].push(pick);
                grew = true;
                break;
            }
        }
    }
    std::map<int, int> owner;
    for (int i = 0; i < n; ++i) owner[c.buses[i].id] = (label[i] < 0 ? 0 : label[i]) + 1;
    return partition(c, owner);
}

void TimeGrid::validate() const {
    if (epochs < 1 || days < 1 || steps_per_day < 1)
        throw CaseError(CaseError::Kind::Domain, 0, "epochs, days and steps per day must be >= 1");
    if (steps() % epochs != 0)
        throw CaseError(CaseError::Kind::Domain, 0,
                        "horizon of " + std::to_string(steps()) + " steps is not divisible into " +
                            std::to_string(epochs) + " epochs");
}

std::vector<std::vector<double>> expand_demand(const NetworkCase& c, const TimeGrid& grid,
                                               const std::vector<double>& profile) {
    if (static_cast<int>(profile.size()) != grid.steps_per_day)
        throw CaseError(CaseError::Kind::Domain, 0,
                        "demand profile has " + std::to_string(profile.size()) + " factors, expected " +
                            std::to_string(grid.steps_per_day));
    for (double f : profile)
        if (!(f >= 0) || !std::isfinite(f))
            throw CaseError(CaseError::Kind::Domain, 0, "demand profile factors must be finite and >= 0");
    std::vector<std::vector<double>> d(c.buses.size(), std::vector<double>(grid.steps()));
    for (std::size_t b = 0; b < c.buses.size(); ++b)
        for (int t = 0; t < grid.steps(); ++t)
            d[b][t] = c.buses[b].demand * profile[t % grid.steps_per_day];
    return d;
}

}  // namespace cbmuc
