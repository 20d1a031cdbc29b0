#include <doctest.h>

#include <algorithm>
#include <random>

#include "cbmuc/case_model.hpp"

using namespace cbmuc;

namespace {

const char* kTwoBus = R"(# two buses, one line
BUS
1 0
2 3
BRANCH
1 2 10 5
GEN
1 1 0 10 10 1 1
COST
1 1 2 0 0 100 1000
)";

std::string data(const std::string& rel) { return std::string(CBMUC_DATA_DIR) + "/" + rel; }

std::vector<int> ids(std::initializer_list<int> v) { return std::vector<int>(v); }

}  // namespace

TEST_CASE("parse_case: two-bus fixture") {
    NetworkCase c = parse_case(kTwoBus);
    CHECK(c.buses.size() == 2);
    CHECK(c.lines.size() == 1);
    CHECK(c.generators.size() == 1);
    CHECK(c.lines[0].susceptance == 10.0);
    CHECK(c.lines[0].capacity == 5.0);
    CHECK(c.buses[1].demand == 3.0);
    CHECK(c.generators[0].pmax == 10.0);
    CHECK(c.generators[0].init_status == 0);
    CHECK(c.generators[0].init_hold == 0);
    CHECK(c.generators[0].failure_cost == 1000.0);
}

TEST_CASE("parse_case: errors") {
    SUBCASE("empty file") {
        try {
            parse_case("");
            FAIL("expected an error");
        } catch (const CaseError& e) {
            CHECK(e.kind() == CaseError::Kind::Syntax);
        }
    }
    SUBCASE("unknown bus in a branch") {
        std::string text = kTwoBus;
        text.replace(text.find("1 2 10 5"), 8, "1 99 10 5");
        try {
            parse_case(text);
            FAIL("expected an error");
        } catch (const CaseError& e) {
            CHECK(e.kind() == CaseError::Kind::Reference);
            CHECK(std::string(e.what()).find("99") != std::string::npos);
            CHECK(e.line() == 6);
        }
    }
    SUBCASE("negative capacity") {
        std::string text = kTwoBus;
        text.replace(text.find("1 2 10 5"), 8, "1 2 10 -5");
        CHECK_THROWS_AS(parse_case(text), CaseError);
    }
    SUBCASE("malformed number reports the column") {
        std::string text = kTwoBus;
        text.replace(text.find("2 3\n"), 3, "2 x3");
        try {
            parse_case(text);
            FAIL("expected an error");
        } catch (const CaseError& e) {
            CHECK(e.kind() == CaseError::Kind::Syntax);
            CHECK(std::string(e.what()).find("column 3") != std::string::npos);
        }
    }
    SUBCASE("pmin above pmax") {
        std::string text = kTwoBus;
        text.replace(text.find("1 1 0 10"), 8, "1 1 12 10");
        CHECK_THROWS_AS(parse_case(text), CaseError);
    }
    SUBCASE("generator without costs") {
        std::string text = kTwoBus;
        text.erase(text.find("COST"));
        CHECK_THROWS_AS(parse_case(text), CaseError);
    }
}

TEST_CASE("parse_case: serialize round trip") {
    for (const char* f : {"fixture3/case.txt", "fig1/case.txt", "ieee30/case.txt"}) {
        NetworkCase a = load_case(data(f));
        std::string once = serialize_case(a);
        NetworkCase b = parse_case(once);
        CHECK(serialize_case(b) == once);
        REQUIRE(a.buses.size() == b.buses.size());
        for (std::size_t i = 0; i < a.buses.size(); ++i) CHECK(a.buses[i].demand == b.buses[i].demand);
        REQUIRE(a.lines.size() == b.lines.size());
        for (std::size_t i = 0; i < a.lines.size(); ++i)
            CHECK(a.lines[i].susceptance == b.lines[i].susceptance);
    }
    NetworkCase ieee = load_case(data("ieee30/case.txt"));
    CHECK(ieee.buses.size() == 30);
    CHECK(ieee.lines.size() == 41);
    CHECK(ieee.generators.size() == 6);
}

TEST_CASE("parse_partition: three-region example") {
    NetworkCase c = load_case(data("fig1/case.txt"));
    PartitionedCase p = load_partition(data("fig1/partition.txt"), c);
    const int A = 1, B = 2, C = 3, D = 4, E = 5, F = 6, G = 7, H = 8;
    REQUIRE(p.regions.size() == 3);
    CHECK(p.region(1).boundary == ids({B, C}));
    CHECK(p.region(1).foreign == ids({E, G}));
    CHECK(p.region(2).boundary == ids({E}));
    CHECK(p.region(2).foreign == ids({C, F}));
    CHECK(p.region(3).boundary == ids({F, G}));
    CHECK(p.region(3).foreign == ids({B, E}));
    CHECK(p.region(1).internal == ids({A}));
    CHECK(p.region(2).internal == ids({D}));
    CHECK(p.region(3).internal == ids({H}));
    CHECK(p.region(2).neighbors == ids({1, 3}));
    // E is seen by both other regions; foreign buses map to their owner
    CHECK(p.region(2).bus_neighbors.at(E) == ids({1, 3}));
    CHECK(p.region(1).bus_neighbors.at(E) == ids({2}));
    CHECK(p.shared_with(1, 2) == ids({C, E}));
    CHECK(p.shared_with(1, 3) == ids({B, G}));
    std::size_t entries = 0;
    for (const Region& r : p.regions)
        for (const auto& [b, who] : r.bus_neighbors) entries += who.size();
    CHECK(entries == 12);
}

TEST_CASE("parse_partition: degenerate splits") {
    NetworkCase c = parse_case(kTwoBus);
    PartitionedCase one = single_region(c);
    REQUIRE(one.regions.size() == 1);
    CHECK(one.regions[0].boundary.empty());
    CHECK(one.regions[0].foreign.empty());
    CHECK(one.regions[0].internal == ids({1, 2}));
    CHECK(one.regions[0].tie_lines.empty());

    PartitionedCase two = parse_partition("1 1\n2 2\n", c);
    for (const Region& r : two.regions) {
        CHECK(r.boundary.size() == 1);
        CHECK(r.foreign.size() == 1);
        CHECK(r.internal.empty());
    }
}

TEST_CASE("parse_partition: errors") {
    NetworkCase c = parse_case(kTwoBus);
    CHECK_THROWS_AS(parse_partition("1 1\n", c), CaseError);          // unassigned
    CHECK_THROWS_AS(parse_partition("1 1\n2 1\n7 2\n", c), CaseError);  // unknown bus
    CHECK_THROWS_AS(parse_partition("1 1\n1 2\n2 1\n", c), CaseError);  // two owners
}

TEST_CASE("partition properties on the 30-bus case") {
    NetworkCase c = load_case(data("ieee30/case.txt"));
    std::string text = read_file(data("ieee30/partition_4.txt"));
    PartitionedCase p = parse_partition(text, c);

    // line order in the file does not matter
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    std::mt19937 rng(7);
    std::shuffle(lines.begin(), lines.end(), rng);
    std::string shuffled;
    for (auto& l : lines) shuffled += l + "\n";
    PartitionedCase q = parse_partition(shuffled, c);
    for (std::size_t i = 0; i < p.regions.size(); ++i) {
        CHECK(p.regions[i].boundary == q.regions[i].boundary);
        CHECK(p.regions[i].foreign == q.regions[i].foreign);
        CHECK(p.regions[i].internal == q.regions[i].internal);
        CHECK(p.regions[i].bus_neighbors == q.regions[i].bus_neighbors);
    }

    // every tie line is carried by exactly its two endpoint regions
    int crossing = 0;
    for (std::size_t k = 0; k < c.lines.size(); ++k) {
        int ra = p.owner.at(c.lines[k].from), rb = p.owner.at(c.lines[k].to);
        int carriers = 0;
        for (const Region& r : p.regions)
            if (std::count(r.tie_lines.begin(), r.tie_lines.end(), static_cast<int>(k))) ++carriers;
        if (ra != rb) {
            ++crossing;
            CHECK(carriers == 2);
        } else {
            CHECK(carriers == 0);
        }
    }
    std::size_t tie_total = 0;
    for (const Region& r : p.regions) tie_total += r.tie_lines.size();
    CHECK(tie_total == static_cast<std::size_t>(2 * crossing));

    // symmetric visibility and exhaustive disjoint ownership
    std::size_t owned = 0;
    for (const Region& r : p.regions) {
        owned += r.owned().size();
        for (int k : r.tie_lines) {
            const Line& l = c.lines[k];
            int u = r.owns(l.from) ? l.from : l.to;
            int v = u == l.from ? l.to : l.from;
            const Region& other = p.region(p.owner.at(v));
            CHECK(std::binary_search(other.boundary.begin(), other.boundary.end(), v));
            CHECK(std::binary_search(other.foreign.begin(), other.foreign.end(), u));
        }
    }
    CHECK(owned == c.buses.size());
}

TEST_CASE("auto_partition yields nonempty balanced regions") {
    NetworkCase c = load_case(data("ieee30/case.txt"));
    for (int n : {1, 2, 3, 4, 6}) {
        PartitionedCase p = auto_partition(c, n);
        CHECK(p.regions.size() == static_cast<std::size_t>(n));
        for (const Region& r : p.regions) CHECK(!r.owned().empty());
        PartitionedCase again = auto_partition(c, n);
        CHECK(again.owner == p.owner);
    }
}

TEST_CASE("time grid and demand expansion") {
    NetworkCase c = parse_case("BUS\n1 100\n2 0\n");
    TimeGrid g{1, 1, 2};
    auto d = expand_demand(c, g, {0.5, 1.0});
    CHECK(d[0] == std::vector<double>{50, 100});
    CHECK(d[1] == std::vector<double>{0, 0});
    TimeGrid flat{1, 3, 4};
    auto e = expand_demand(c, flat, {1, 1, 1, 1});
    CHECK(std::all_of(e[0].begin(), e[0].end(), [](double v) { return v == 100.0; }));
    CHECK_THROWS_AS(expand_demand(c, g, {1.0}), CaseError);

    TimeGrid bad{4, 3, 2};
    CHECK_THROWS_AS(bad.validate(), CaseError);
    TimeGrid ok{3, 3, 2};
    ok.validate();
    CHECK(ok.epoch_length() == 2);
    CHECK(ok.epoch_begin(2) == 4);
    CHECK(ok.epoch_of(5) == 2);
}
