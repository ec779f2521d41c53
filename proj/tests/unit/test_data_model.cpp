#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "serocontact/age_grid.hpp"
#include "serocontact/contact_survey.hpp"
#include "serocontact/csv.hpp"
#include "serocontact/demography.hpp"
#include "serocontact/rng.hpp"
#include "serocontact/serology.hpp"
#include "test_helpers.hpp"

using namespace sero;
using testutil::TempDir;

TEST_CASE("csv reader enforces header and field counts") {
    TempDir tmp("csv");
    auto p = tmp.write("bad_header.csv", "id,years,status\n1,2.0,1\n");
    REQUIRE_THROWS_AS(csv::read_table(p, {"id", "age", "status"}), ParseError);

    auto q = tmp.write("short_row.csv", "a,b\n1,2\n3\n");
    try {
        csv::read_table(q, {"a", "b"});
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(e.line() == 3);
    }
}

TEST_CASE("csv numeric parsing reports line and column") {
    TempDir tmp("csvnum");
    auto p = tmp.write("t.csv", "a,b\n1,x\n");
    csv::Table t = csv::read_table(p, {"a", "b"});
    try {
        csv::parse_double(t, 0, 1);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(e.line() == 2);
        REQUIRE(std::string(e.what()).find("b") != std::string::npos);
    }
}

TEST_CASE("csv doubles survive a write/read round trip") {
    Rng rng(20240811u);
    for (int i = 0; i < 200; ++i) {
        double v = std::exp(rng.uniform(-20.0, 20.0)) * (rng.bernoulli(0.5) ? 1 : -1);
        std::string s = csv::format_double(v);
        REQUIRE(std::stod(s) == v);
    }
    REQUIRE(csv::format_double(0.1) == "0.1");
    REQUIRE(csv::format_double(0.0) == "0");
}

TEST_CASE("age grid maps ages to classes with inclusive top end") {
    AgeGrid g({0.5, 2, 6, 12, 19, 31, 80});
    REQUIRE(g.classes() == 6);
    REQUIRE(g.class_of(1.0) == 0);
    REQUIRE(g.class_of(2.0) == 1);
    REQUIRE(g.class_of(5.999) == 1);
    REQUIRE(g.class_of(31.0) == 5);
    REQUIRE(g.class_of(80.0) == 5);
    REQUIRE(!g.contains(0.5));
    REQUIRE(!g.contains(80.0001));
    REQUIRE_THROWS_AS(g.class_of(0.25), DomainError);
    REQUIRE(g.widths() == std::vector<double>{1.5, 4, 6, 7, 12, 49});
    REQUIRE(g.midpoint(0) == 1.25);
    REQUIRE(g.midpoint(5) == 55.5);
}

TEST_CASE("age grid rejects non-increasing breakpoints") {
    REQUIRE_THROWS_AS(AgeGrid({1.0, 1.0, 2.0}), DomainError);
    REQUIRE_THROWS_AS(AgeGrid({1.0}), DomainError);
}

TEST_CASE("demography invariants") {
    REQUIRE_THROWS_AS(Demography(0, 80, 7.0 / 365, 0.5, {1.0}), DomainError);
    REQUIRE_THROWS_AS(Demography(100, 80, 1.5, 0.5, std::vector<double>(80, 1.25)), DomainError);
    REQUIRE_THROWS_AS(Demography(100, 80, 7.0 / 365, 80, std::vector<double>(80, 1.25)), DomainError);
    // population must sum to N below L
    REQUIRE_THROWS_AS(Demography(1000, 80, 7.0 / 365, 0.5, std::vector<double>(80, 1.25)),
                      DomainError);

    Demography d = Demography::uniform(9943749, 80, 7.0 / 365, 0.5);
    REQUIRE_THAT(d.nd_over_l(), Catch::Matchers::WithinRel(2383.7754452054796, 1e-14));
    REQUIRE(d.population_by_age().size() == 80);
}

TEST_CASE("band population uses band midpoints against the grid") {
    std::vector<double> pop(80, 10.0);
    Demography d(800, 80, 7.0 / 365, 0.5, pop);
    AgeGrid g({0.5, 2, 6, 12, 19, 31, 80});
    auto bp = d.band_population(g);
    // bands [0,1) and [1,2) have midpoints 0.5 and 1.5; only 1.5 is inside (0.5, 2)
    REQUIRE(bp[0] == 10.0);
    REQUIRE(bp[1] == 40.0);
    REQUIRE(bp[2] == 60.0);
    REQUIRE(bp[3] == 70.0);
    REQUIRE(bp[4] == 120.0);
    REQUIRE(bp[5] == 490.0);
}

TEST_CASE("census table loads and aggregates") {
    TempDir tmp("census");
    auto p = tmp.write("census.csv",
                       "age,household_size,count\n"
                       "5,1,100\n5,2,100\n5,2,50\n70,3,20\n");
    CensusTable c = CensusTable::load(p);
    REQUIRE(c.total() == 270.0);
    auto pop = c.population_by_age();
    REQUIRE(pop[5] == 250.0);
    REQUIRE(pop[70] == 20.0);
    auto m = c.household_size_by_age();
    REQUIRE(m[5][1] == 150.0);
}

TEST_CASE("serology load applies age window and flags integer ages") {
    TempDir tmp("sero");
    auto p = tmp.write("s.csv",
                       "id,age,status\n"
                       "a,0.25,1\n"
                       "b,1.0,0\n"
                       "c,5.5,1\n"
                       "d,81,1\n");
    SerologyDataset ds = SerologyDataset::load(p, 0.5, 80.0);
    REQUIRE(ds.size() == 2);
    REQUIRE(ds.excluded_below_maternal() == 1);
    REQUIRE(ds.excluded_above_life_expectancy() == 1);
    REQUIRE(!ds[0].age_known_exactly);
    REQUIRE(ds[1].age_known_exactly);
    REQUIRE(ds.count_immune() == 1);
}

TEST_CASE("serology load rejects bad status with the offending line") {
    TempDir tmp("serobad");
    auto p = tmp.write("s.csv", "id,age,status\na,1.5,1\nb,2.5,2\n");
    try {
        SerologyDataset::load(p);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(e.line() == 3);
    }
}

TEST_CASE("serology round trip preserves fields") {
    TempDir tmp("serort");
    Rng rng(77u);
    std::string content = "id,age,status\n";
    std::vector<double> ages;
    for (int i = 0; i < 50; ++i) {
        double a = rng.uniform(0.6, 79.9);
        if (rng.bernoulli(0.3)) a = std::floor(a);
        ages.push_back(a);
        content += "s" + std::to_string(i) + "," + csv::format_double(a) + "," +
                   (rng.bernoulli(0.5) ? "1" : "0") + "\n";
    }
    auto p = tmp.write("s.csv", content);
    SerologyDataset ds = SerologyDataset::load(p);
    ds.write(tmp.path("s2.csv"));
    SerologyDataset ds2 = SerologyDataset::load(tmp.path("s2.csv"));
    REQUIRE(ds.size() == ds2.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        REQUIRE(ds[i].id == ds2[i].id);
        REQUIRE(ds[i].age == ds2[i].age);
        REQUIRE(ds[i].status == ds2[i].status);
        REQUIRE(ds[i].age_known_exactly == ds2[i].age_known_exactly);
    }
}

static std::string survey_participants() {
    return "part_id,part_age,household_size,day_type\n"
           "p1,5,2,weekday\n"
           "p2,30.5,4,weekend\n";
}

TEST_CASE("contact survey load drops contacts with no age information") {
    TempDir tmp("survey");
    auto pp = tmp.write("p.csv", survey_participants());
    auto cp = tmp.write("c.csv",
                        "part_id,cnt_age_low,cnt_age_high,closeness,duration\n"
                        "p1,10,20,close,h1_4\n"
                        "p1,,,close,gt4h\n"
                        "p2,5,,nonclose,lt5m\n"
                        "p2,,7,close,m5_15\n");
    ContactSurvey s = ContactSurvey::load(pp, cp);
    REQUIRE(s.participants().size() == 2);
    REQUIRE(s.contacts().size() == 3);
    REQUIRE(s.dropped_missing_age() == 1);
    REQUIRE(s.contacts()[1].age_low == 5.0);
    REQUIRE(s.contacts()[1].age_high == 5.0);
    REQUIRE(s.contacts()[2].age_mid() == 7.0);
}

TEST_CASE("contact survey rejects orphans and duplicates") {
    TempDir tmp("surveybad");
    auto pp = tmp.write("p.csv", survey_participants());
    auto cp = tmp.write("c.csv",
                        "part_id,cnt_age_low,cnt_age_high,closeness,duration\n"
                        "p9,10,20,close,h1_4\n");
    REQUIRE_THROWS_AS(ContactSurvey::load(pp, cp), DomainError);

    auto pd = tmp.write("pd.csv",
                        "part_id,part_age,household_size,day_type\n"
                        "p1,5,2,weekday\np1,6,2,weekday\n");
    auto ce = tmp.write("ce.csv", "part_id,cnt_age_low,cnt_age_high,closeness,duration\n");
    REQUIRE_THROWS_AS(ContactSurvey::load(pd, ce), ParseError);
}

TEST_CASE("reported-contact outliers are removed and counted") {
    TempDir tmp("outlier");
    auto pp = tmp.write("p.csv", survey_participants());
    std::string contacts = "part_id,cnt_age_low,cnt_age_high,closeness,duration\n";
    for (int i = 0; i < 1001; ++i) contacts += "p1,10,20,close,h1_4\n";
    contacts += "p2,10,20,close,h1_4\n";
    auto cp = tmp.write("c.csv", contacts);
    ContactSurvey s = ContactSurvey::load(pp, cp);
    REQUIRE(s.excluded_outliers() == 1);
    REQUIRE(s.participants().size() == 1);
    REQUIRE(s.participants()[0].id == "p2");
    REQUIRE(s.contacts().size() == 1);
}

TEST_CASE("contact filters implement the nested definitions") {
    using C = Closeness;
    using D = Duration;
    // close 5-15min, close 1-4h, nonclose >4h
    REQUIRE(filter_keeps(ContactFilter::C3, C::close, D::h1_4));
    REQUIRE(!filter_keeps(ContactFilter::C3, C::close, D::m5_15));
    REQUIRE(!filter_keeps(ContactFilter::C3, C::nonclose, D::gt4h));
    REQUIRE(filter_keeps(ContactFilter::C5, C::close, D::h1_4));
    REQUIRE(filter_keeps(ContactFilter::C5, C::nonclose, D::gt4h));
    REQUIRE(!filter_keeps(ContactFilter::C5, C::close, D::m5_15));

    // subset relations over every closeness x duration combination
    for (C c : {C::close, C::nonclose}) {
        for (D d : {D::lt5m, D::m5_15, D::m15_60, D::h1_4, D::gt4h}) {
            if (filter_keeps(ContactFilter::C3, c, d)) {
                REQUIRE(filter_keeps(ContactFilter::C2, c, d));
                REQUIRE(filter_keeps(ContactFilter::C5, c, d));
            }
            if (filter_keeps(ContactFilter::C2, c, d))
                REQUIRE(filter_keeps(ContactFilter::C1, c, d));
            if (filter_keeps(ContactFilter::C5, c, d))
                REQUIRE((filter_keeps(ContactFilter::C4, c, d) ||
                         filter_keeps(ContactFilter::C3, c, d)));
        }
    }
}

TEST_CASE("filtering keeps zero-contact participants") {
    TempDir tmp("filter");
    auto pp = tmp.write("p.csv", survey_participants());
    auto cp = tmp.write("c.csv",
                        "part_id,cnt_age_low,cnt_age_high,closeness,duration\n"
                        "p1,10,20,nonclose,lt5m\n");
    ContactSurvey s = ContactSurvey::load(pp, cp);
    ContactSurvey c2 = s.filtered(ContactFilter::C2);
    REQUIRE(c2.participants().size() == 2);
    REQUIRE(c2.contacts().empty());
}

TEST_CASE("diary weights reproduce the two-cell ratio example") {
    // census 50/50 over two cells, survey splits 1/3
    std::vector<CensusRow> rows = {{5, 1, 100.0}, {5, 2, 100.0}};
    Demography demo = Demography::from_census(CensusTable(rows), 80, 7.0 / 365, 0.5);

    std::vector<Participant> parts;
    parts.push_back({"a", 5.0, 1, DayType::weekday, 1.0});
    for (int i = 0; i < 3; ++i)
        parts.push_back({"b" + std::to_string(i), 5.0, 2, DayType::weekday, 1.0});
    ContactSurvey s(parts, {});
    s.compute_diary_weights(demo);
    REQUIRE_THAT(s.participants()[0].weight, Catch::Matchers::WithinAbs(2.0, 1e-12));
    REQUIRE_THAT(s.participants()[1].weight, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
    REQUIRE(s.weights_normalized());
}

TEST_CASE("diary weights are one for a proportional sample and mean one in general") {
    std::vector<CensusRow> rows = {{5, 1, 300.0}, {25, 2, 100.0}};
    Demography demo = Demography::from_census(CensusTable(rows), 80, 7.0 / 365, 0.5);
    std::vector<Participant> parts;
    for (int i = 0; i < 3; ++i) parts.push_back({"a" + std::to_string(i), 5.0, 1, DayType::weekday, 1.0});
    parts.push_back({"b", 25.0, 2, DayType::weekday, 1.0});
    ContactSurvey s(parts, {});
    s.compute_diary_weights(demo);
    for (const auto& p : s.participants())
        REQUIRE_THAT(p.weight, Catch::Matchers::WithinAbs(1.0, 1e-12));

    // random surveys always end up mean-1
    Rng rng(99u);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Participant> ps;
        int n = 1 + static_cast<int>(rng.uniform_index(40));
        for (int i = 0; i < n; ++i)
            ps.push_back({"x" + std::to_string(i), rng.uniform(0.6, 79.0),
                          1 + static_cast<int>(rng.uniform_index(7)), DayType::weekday, 1.0});
        ContactSurvey r(ps, {});
        r.compute_diary_weights(demo);
        REQUIRE(r.weights_normalized());
    }
}

TEST_CASE("single participant gets weight one") {
    std::vector<CensusRow> rows = {{5, 1, 100.0}, {25, 3, 900.0}};
    Demography demo = Demography::from_census(CensusTable(rows), 80, 7.0 / 365, 0.5);
    ContactSurvey s({{"only", 25.0, 3, DayType::weekend, 1.0}}, {});
    s.compute_diary_weights(demo);
    REQUIRE_THAT(s.participants()[0].weight, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("survey round trip preserves fields") {
    TempDir tmp("surveyrt");
    auto pp = tmp.write("p.csv", survey_participants());
    auto cp = tmp.write("c.csv",
                        "part_id,cnt_age_low,cnt_age_high,closeness,duration\n"
                        "p1,10,20.5,close,h1_4\n"
                        "p2,0.5,0.5,nonclose,gt4h\n");
    ContactSurvey s = ContactSurvey::load(pp, cp);
    s.write(tmp.path("p2.csv"), tmp.path("c2.csv"));
    ContactSurvey s2 = ContactSurvey::load(tmp.path("p2.csv"), tmp.path("c2.csv"));
    REQUIRE(s2.participants().size() == s.participants().size());
    REQUIRE(s2.contacts().size() == s.contacts().size());
    for (std::size_t i = 0; i < s.participants().size(); ++i) {
        REQUIRE(s.participants()[i].id == s2.participants()[i].id);
        REQUIRE(s.participants()[i].age == s2.participants()[i].age);
        REQUIRE(s.participants()[i].household_size == s2.participants()[i].household_size);
        REQUIRE(s.participants()[i].day_type == s2.participants()[i].day_type);
    }
    for (std::size_t i = 0; i < s.contacts().size(); ++i) {
        REQUIRE(s.contacts()[i].age_low == s2.contacts()[i].age_low);
        REQUIRE(s.contacts()[i].age_high == s2.contacts()[i].age_high);
        REQUIRE(s.contacts()[i].closeness == s2.contacts()[i].closeness);
        REQUIRE(s.contacts()[i].duration == s2.contacts()[i].duration);
    }
}
