#include <doctest.h>

#include <cmath>

#include "gridreduce/artifact_io.hpp"
#include "gridreduce/netmodel.hpp"

using namespace gridreduce;

namespace {

std::string data_path(const std::string& name) {
    return std::string(GRIDREDUCE_TEST_DATA) + "/" + name;
}

const char* kTwoBusCase = R"(
function mpc = case2
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0  0 0 0 1 1 0 138 1 1.1 0.9;
    2 1 50 0 0 0 1 1 0 138 1 1.1 0.9;
];
mpc.gen = [
    1 0 0 9999 -9999 1.0 100 1 9999 -9999;
];
mpc.branch = [
    1 2 0 0.1 0 0 0 0 0 0 1 -360 360;
];
)";

} // namespace

TEST_CASE("minimal 2-bus case: per-unit conversion and branch admittance") {
    Network net = parse_case(kTwoBusCase);
    REQUIRE(net.bus_count() == 2);
    REQUIRE(net.branch_count() == 1);
    CHECK(net.base_mva == 100.0);
    CHECK(net.ref_bus == 1);
    CHECK(net.buses[1].kind == BusKind::PQ);
    CHECK(net.buses[1].p_inj == doctest::Approx(-0.5).epsilon(1e-15));
    // y = 1/(j0.1) = -j10
    CHECK(net.branches[0].series_g == doctest::Approx(0.0));
    CHECK(net.branches[0].series_b == doctest::Approx(-10.0).epsilon(1e-15));
}

TEST_CASE("6-bus case: injections in per unit") {
    Network net = parse_case(read_text_file(data_path("case6.m")));
    REQUIRE(net.bus_count() == 6);
    REQUIRE(net.branch_count() == 7);
    const double expected[] = {-4.0, 1.0, 2.0, 0.5, 0.3, 0.2};
    for (int i = 0; i < 6; ++i) CHECK(net.buses[i].p_inj == doctest::Approx(expected[i]).epsilon(1e-15));
    for (const Branch& br : net.branches) {
        CHECK(br.reactance == 0.1);
        CHECK(br.resistance == 0.0);
    }
    CHECK(net.ref_bus == 1);
}

TEST_CASE("two generators at one bus are summed with the load") {
    std::string txt = R"(
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0  0 0 0 1 1 0 138 1 1.1 0.9;
    2 2 10 0 0 0 1 1 0 138 1 1.1 0.9;
];
mpc.gen = [
    1 0  0 9999 -9999 1.0 100 1 9999 -9999;
    2 30 0 9999 -9999 1.0 100 1 9999 -9999;
    2 20 0 9999 -9999 1.0 100 1 9999 -9999;
];
mpc.branch = [
    1 2 0 0.1 0 0 0 0 0 0 1 -360 360;
];
)";
    Network net = parse_case(txt);
    CHECK(net.buses[1].p_inj == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("out-of-service generators and branches are dropped") {
    std::string txt = R"(
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0 0 0 1 1 0 138 1 1.1 0.9;
    2 1 0 0 0 0 1 1 0 138 1 1.1 0.9;
];
mpc.gen = [
    1 0  0 9999 -9999 1.0 100 1 9999 -9999;
    2 50 0 9999 -9999 1.0 100 0 9999 -9999;
];
mpc.branch = [
    1 2 0 0.1 0 0 0 0 0 0 1 -360 360;
    1 2 0 0.2 0 0 0 0 0 0 0 -360 360;
];
)";
    Network net = parse_case(txt);
    CHECK(net.buses[1].p_inj == 0.0);
    CHECK(net.branch_count() == 1);
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(parse_case("mpc.baseMVA = 100;"), MalformedCase);

    std::string no_slack = R"(
mpc.baseMVA = 100;
mpc.bus = [
    1 1 0 0 0 0 1 1 0 138 1 1.1 0.9;
    2 1 0 0 0 0 1 1 0 138 1 1.1 0.9;
];
mpc.gen = [
];
mpc.branch = [
    1 2 0 0.1 0 0 0 0 0 0 1 -360 360;
];
)";
    CHECK_THROWS_AS(parse_case(no_slack), NoSlack);

    std::string disconnected = R"(
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0 0 0 1 1 0 138 1 1.1 0.9;
    2 1 0 0 0 0 1 1 0 138 1 1.1 0.9;
    3 1 0 0 0 0 1 1 0 138 1 1.1 0.9;
];
mpc.gen = [
    1 0 0 9999 -9999 1.0 100 1 9999 -9999;
];
mpc.branch = [
    1 2 0 0.1 0 0 0 0 0 0 1 -360 360;
];
)";
    CHECK_THROWS_AS(parse_case(disconnected), Disconnected);

    std::string bad_number = R"(
mpc.baseMVA = 100;
mpc.bus = [
    1 3 xyz 0 0 0 1 1 0 138 1 1.1 0.9;
];
mpc.gen = [
];
mpc.branch = [
];
)";
    CHECK_THROWS_AS(parse_case(bad_number), MalformedCase);
}

TEST_CASE("validate flags rule violations as data") {
    Network net = parse_case(read_text_file(data_path("case6.m")));
    CHECK(validate(net).empty());

    SUBCASE("duplicate slack") {
        net.buses[1].kind = BusKind::Slack;
        auto v = validate(net);
        REQUIRE(!v.empty());
        bool found = false;
        for (const auto& x : v) found |= x.rule == "DuplicateSlack";
        CHECK(found);
    }
    SUBCASE("dangling branch") {
        net.branches[0].to_bus = 99;
        auto v = validate(net);
        bool found = false;
        for (const auto& x : v) found |= x.rule == "DanglingBranch";
        CHECK(found);
    }
}

TEST_CASE("round-trip: serialize then reparse is exact") {
    for (const char* name : {"case6.m", "case118.m"}) {
        Network a = parse_case(read_text_file(data_path(name)));
        Network b = parse_case(to_case_text(a));
        CHECK(networks_equal(a, b));
        // and a second hop is byte-stable
        CHECK(to_case_text(a) == to_case_text(b));
    }
}

TEST_CASE("per-unit conversion recovers source MW within 1e-9") {
    for (const char* name : {"case6.m", "case118.m"}) {
        Network net = parse_case(read_text_file(data_path(name)));
        for (const Bus& b : net.buses)
            CHECK(std::abs(b.p_inj * net.base_mva - (b.pg_mw - b.pd_mw)) < 1e-9);
    }
}
