#include <catch2/catch.hpp>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "fairdist/dataset.hpp"
#include "support.hpp"

using namespace fairdist;

namespace {

DatasetSchema toy_schema() {
    DatasetSchema schema;
    schema.features = {
        {"age", FeatureKind::Continuous, FeatureRole::Feature, std::nullopt},
        {"sex", FeatureKind::Binary, FeatureRole::Feature, std::nullopt},
        {"race", FeatureKind::Binary, FeatureRole::Protected, std::nullopt},
        {"priors", FeatureKind::Continuous, FeatureRole::Feature, std::nullopt},
        {"degree", FeatureKind::Binary, FeatureRole::Feature, std::nullopt},
        {"recid", FeatureKind::Binary, FeatureRole::Label, std::nullopt},
    };
    return schema;
}

std::string toy_csv() {
    return "id,age,sex,race,priors,degree,recid,ignored\n"
           "1,25,Male,GroupA,0,F,0,x\n"
           "2,33,Female,GroupB,2,M,1,x\n"
           "3,41,Male,GroupA,5,F,1,x\n"
           "4,22,Female,GroupB,1,M,0,x\n"
           "5,58,Male,GroupA,3,F,1,x\n"
           "6,37,Female,GroupB,0,M,0,x\n";
}

std::string write_temp_csv(const std::string& name, const std::string& content) {
    const std::string dir = testsupport::scratch_dir("dataset_" + name);
    const std::string path = dir + "/data.csv";
    testsupport::write_file(path, content);
    return path;
}

} // namespace

TEST_CASE("load_csv selects schema columns and keeps row counts") {
    const auto path = write_temp_csv("basic", toy_csv());
    const RawTable t = load_csv(path, toy_schema());
    REQUIRE(t.n_rows() == 6);
    REQUIRE(t.column_names.size() == 6);
    REQUIRE(t.dropped_missing == 0);
    REQUIRE(t.columns[t.column_index("age")][0] == "25");
    REQUIRE(t.columns[t.column_index("recid")][5] == "0");
}

TEST_CASE("load_csv drops and counts rows with missing schema values") {
    const std::string csv =
        "age,sex,race,priors,degree,recid\n"
        "25,Male,GroupA,0,F,0\n"
        ",Female,GroupB,2,M,1\n"      // missing age
        "41,Male,GroupA,5,F,1\n"
        "22,Female,GroupB,1,M,0\n"
        "58,Male,GroupA,3,F,1\n";
    const auto path = write_temp_csv("missing", csv);
    const RawTable t = load_csv(path, toy_schema());
    REQUIRE(t.n_rows() == 4);
    REQUIRE(t.dropped_missing == 1);
}

TEST_CASE("load_csv error paths") {
    const auto schema = toy_schema();
    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_csv("/nonexistent/nope.csv", schema), Error);
    }
    SECTION("missing column") {
        const auto path = write_temp_csv("nocol", "age,sex,race,priors,recid\n1,M,A,0,0\n");
        REQUIRE_THROWS_AS(load_csv(path, schema), Error);
    }
    SECTION("no data rows") {
        const auto path = write_temp_csv("empty", "age,sex,race,priors,degree,recid\n");
        REQUIRE_THROWS_WITH(load_csv(path, schema), Catch::Contains("no usable data rows"));
    }
    SECTION("non-numeric continuous column") {
        const auto path = write_temp_csv(
            "badnum", "age,sex,race,priors,degree,recid\ntwenty,Male,GroupA,0,F,0\n");
        REQUIRE_THROWS_WITH(load_csv(path, schema), Catch::Contains("age"));
    }
}

TEST_CASE("load_csv applies value whitelists and numeric range filters") {
    std::string csv =
        "age,sex,race,priors,degree,recid,screen_gap\n"
        "25,Male,GroupA,0,F,0,5\n"
        "33,Female,GroupC,2,M,1,0\n"     // race not whitelisted
        "41,Male,GroupB,5,F,1,-40\n"     // out of range
        "22,Female,GroupB,1,M,0,12\n"
        "58,Male,GroupA,3,F,1,-3\n";
    const auto path = write_temp_csv("filters", csv);
    DatasetSchema schema = toy_schema();
    schema.filters = {
        {"race", {"GroupA", "GroupB"}, std::nullopt, std::nullopt},
        {"screen_gap", {}, -30.0, 30.0},
    };
    const RawTable t = load_csv(path, schema);
    REQUIRE(t.n_rows() == 3);
    REQUIRE(t.filtered_out == 2);
}

TEST_CASE("csv parser handles quoted fields and CRLF") {
    const std::string csv =
        "age,sex,race,priors,degree,recid\r\n"
        "25,\"Ma,le\",GroupA,0,F,0\r\n"
        "33,\"Fe\"\"male\",GroupB,2,M,1\r\n";
    const auto path = write_temp_csv("quoted", csv);
    DatasetSchema schema = toy_schema();
    const RawTable t = load_csv(path, schema);
    REQUIRE(t.n_rows() == 2);
    REQUIRE(t.columns[t.column_index("sex")][0] == "Ma,le");
    REQUIRE(t.columns[t.column_index("sex")][1] == "Fe\"male");
}

TEST_CASE("preprocess standardizes continuous columns to zero mean, unit variance") {
    const std::string csv =
        "age,sex,race,priors,degree,recid\n"
        "1,Male,GroupA,0,F,0\n"
        "2,Female,GroupB,1,M,1\n"
        "3,Male,GroupA,2,F,1\n";
    const auto path = write_temp_csv("standardize", csv);
    const Dataset ds = preprocess(load_csv(path, toy_schema()), toy_schema());
    const std::size_t age_col = 0;   // age is first declared feature
    // population stddev of {1,2,3} is sqrt(2/3)
    REQUIRE(ds.features(0, age_col) == Approx(-1.22474487139158905).epsilon(1e-12));
    REQUIRE(ds.features(1, age_col) == Approx(0.0).margin(1e-12));
    REQUIRE(ds.features(2, age_col) == Approx(1.22474487139158905).epsilon(1e-12));
    const auto* stat = ds.stat_for("age");
    REQUIRE(stat != nullptr);
    REQUIRE(stat->mean == Approx(2.0));
    REQUIRE(stat->stddev == Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("preprocess encodes binary columns") {
    const std::string csv =
        "age,sex,race,priors,degree,recid\n"
        "1,1,GroupA,0,F,0\n"
        "2,0,GroupB,1,M,1\n"
        "3,1,GroupA,2,F,1\n";
    const auto path = write_temp_csv("binary", csv);
    const Dataset ds = preprocess(load_csv(path, toy_schema()), toy_schema());
    // sex column already 0/1: passes through untouched
    REQUIRE(ds.features(0, 1) == 1.0);
    REQUIRE(ds.features(1, 1) == 0.0);
    // degree F/M encodes lexicographically: F -> 0, M -> 1
    REQUIRE(ds.features(0, 3) == 0.0);
    REQUIRE(ds.features(1, 3) == 1.0);
    // protected and label extracted, not in features
    REQUIRE(ds.feature_names == std::vector<std::string>{"age", "sex", "priors", "degree"});
    REQUIRE(ds.protected_attr == std::vector<int>{0, 1, 0});
    REQUIRE(ds.labels == std::vector<int>{0, 1, 1});
}

TEST_CASE("preprocess honors a declared positive value") {
    const std::string csv =
        "age,sex,race,priors,degree,recid\n"
        "1,Male,GroupA,0,F,0\n"
        "2,Female,GroupB,1,M,1\n";
    const auto path = write_temp_csv("positive", csv);
    DatasetSchema schema = toy_schema();
    schema.features[2].positive_value = "GroupA";   // race
    const Dataset ds = preprocess(load_csv(path, schema), schema);
    REQUIRE(ds.protected_attr == std::vector<int>{1, 0});
}

TEST_CASE("preprocess error paths") {
    SECTION("binary column with three values") {
        const std::string csv =
            "age,sex,race,priors,degree,recid\n"
            "1,Male,GroupA,0,F,0\n"
            "2,Female,GroupB,1,M,1\n"
            "3,Other,GroupA,2,F,1\n";
        const auto path = write_temp_csv("threevals", csv);
        REQUIRE_THROWS_WITH(preprocess(load_csv(path, toy_schema()), toy_schema()),
                            Catch::Contains("sex"));
    }
    SECTION("zero-variance continuous column") {
        const std::string csv =
            "age,sex,race,priors,degree,recid\n"
            "7,Male,GroupA,0,F,0\n"
            "7,Female,GroupB,1,M,1\n";
        const auto path = write_temp_csv("zerovar", csv);
        REQUIRE_THROWS_WITH(preprocess(load_csv(path, toy_schema()), toy_schema()),
                            Catch::Contains("age"));
    }
}

TEST_CASE("preprocess with foreign stats leaves the mean off zero") {
    const std::string train_csv =
        "age,sex,race,priors,degree,recid\n"
        "10,Male,GroupA,0,F,0\n"
        "20,Female,GroupB,1,M,1\n"
        "30,Male,GroupA,2,F,1\n";
    const std::string test_csv =
        "age,sex,race,priors,degree,recid\n"
        "40,Male,GroupA,3,F,0\n"
        "50,Female,GroupB,4,M,1\n";
    const auto train_path = write_temp_csv("fit_train", train_csv);
    const auto test_path = write_temp_csv("fit_test", test_csv);
    const Dataset train = preprocess(load_csv(train_path, toy_schema()), toy_schema());
    const Dataset test =
        preprocess(load_csv(test_path, toy_schema()), toy_schema(), &train.norm_stats);
    double mean = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) mean += test.features(i, 0);
    mean /= static_cast<double>(test.size());
    REQUIRE(std::fabs(mean) > 1.0);   // 40/50 are far above the training mean of 20
    REQUIRE(test.stat_for("age")->mean == train.stat_for("age")->mean);
}

TEST_CASE("preprocess is idempotent for fixed stats") {
    const auto path = write_temp_csv("idem", toy_csv());
    const auto schema = toy_schema();
    const RawTable raw = load_csv(path, schema);
    const Dataset once = preprocess(raw, schema);
    const Dataset again = preprocess(raw, schema, &once.norm_stats);
    REQUIRE(again.features.data == once.features.data);
    REQUIRE(again.labels == once.labels);
}

TEST_CASE("split produces ceil(f*M) training rows, deterministically") {
    const Dataset ds = testsupport::synthetic_dataset_min_groups(100, 9001);
    auto [train1, test1] = split(ds, 0.7, 42);
    REQUIRE(train1.size() == 70);
    REQUIRE(test1.size() == 30);
    auto [train2, test2] = split(ds, 0.7, 42);
    REQUIRE(train1.features.data == train2.features.data);
    REQUIRE(train1.labels == train2.labels);
    REQUIRE(test1.protected_attr == test2.protected_attr);
    auto [train3, test3] = split(ds, 0.7, 43);
    REQUIRE(train1.labels != train3.labels);   // different seed reshuffles
}

TEST_CASE("train_count is the ceiling for every M up to 1000") {
    for (double f : {0.3, 0.5, 0.55, 0.7, 0.9}) {
        for (std::size_t m = 1; m <= 1000; ++m) {
            // independent ceiling: smallest n with n >= f*m, robust to fp dust
            std::size_t expected = 0;
            while (static_cast<double>(expected) < f * static_cast<double>(m) - 1e-9) ++expected;
            REQUIRE(fairdist::detail::train_count(m, f) == expected);
        }
    }
}

TEST_CASE("split refits normalization on the training rows only") {
    Dataset ds = testsupport::synthetic_dataset_min_groups(200, 77);
    // give the dataset stats as if it had been preprocessed
    ds.norm_stats = {{"x0", 0.0, 1.0}, {"x1", 0.0, 1.0}, {"x2", 0.0, 1.0}};
    auto [train, test] = split(ds, 0.7, 1);

    for (std::size_t col = 0; col < 3; ++col) {
        double mean = 0.0;
        for (std::size_t i = 0; i < train.size(); ++i) mean += train.features(i, col);
        mean /= static_cast<double>(train.size());
        double var = 0.0;
        for (std::size_t i = 0; i < train.size(); ++i)
            var += (train.features(i, col) - mean) * (train.features(i, col) - mean);
        var /= static_cast<double>(train.size());
        REQUIRE(std::fabs(mean) < 1e-9);
        REQUIRE(var == Approx(1.0).margin(1e-6));

        double test_mean = 0.0;
        for (std::size_t i = 0; i < test.size(); ++i) test_mean += test.features(i, col);
        test_mean /= static_cast<double>(test.size());
        // test rows were transformed with training stats, not their own fit
        REQUIRE(std::fabs(test_mean) > 1e-12);
    }
}

TEST_CASE("split errors when a group lands entirely on one side") {
    // one sample per (a,y) group: any 2/2 split strands two groups
    Dataset ds;
    ds.feature_names = {"x"};
    ds.features = Matrix(4, 1);
    for (std::size_t i = 0; i < 4; ++i) ds.features(i, 0) = static_cast<double>(i);
    ds.labels = {0, 1, 0, 1};
    ds.protected_attr = {0, 0, 1, 1};
    REQUIRE_THROWS_WITH(split(ds, 0.5, 3), Catch::Contains("missing"));
}

TEST_CASE("split rejects degenerate inputs") {
    Dataset ds = testsupport::synthetic_dataset_min_groups(50, 5);
    REQUIRE_THROWS_AS(split(ds, 0.0, 1), Error);
    REQUIRE_THROWS_AS(split(ds, 1.0, 1), Error);
    Dataset one;
    one.features = Matrix(1, 1);
    one.labels = {1};
    one.protected_attr = {0};
    REQUIRE_THROWS_AS(split(one, 0.7, 1), Error);
}

TEST_CASE("partition_groups by protected attribute") {
    Dataset ds;
    ds.features = Matrix(4, 1);
    ds.protected_attr = {0, 0, 1, 1};
    ds.labels = {0, 1, 0, 1};
    const GroupPartition p = partition_groups(ds, ParityMode::DP);
    REQUIRE(p.groups.size() == 2);
    REQUIRE(p.groups[0].indices == std::vector<std::size_t>{0, 1});
    REQUIRE(p.groups[1].indices == std::vector<std::size_t>{2, 3});
    REQUIRE(p.groups[0].key() == "a=0");
}

TEST_CASE("partition_groups by protected attribute and label") {
    Dataset ds;
    ds.features = Matrix(4, 1);
    ds.protected_attr = {0, 0, 1, 1};
    ds.labels = {0, 1, 0, 1};
    const GroupPartition p = partition_groups(ds, ParityMode::EO);
    REQUIRE(p.groups.size() == 4);
    for (const auto& g : p.groups) REQUIRE(g.indices.size() == 1);
    REQUIRE(p.groups[0].key() == "a=0,y=0");
    REQUIRE(p.groups[3].key() == "a=1,y=1");
}

TEST_CASE("partition_groups rejects an empty group") {
    Dataset ds;
    ds.features = Matrix(3, 1);
    ds.protected_attr = {0, 0, 0};
    ds.labels = {0, 1, 0};
    REQUIRE_THROWS_WITH(partition_groups(ds, ParityMode::DP), Catch::Contains("a=1"));
}

TEST_CASE("partition_groups index sets partition the sample range") {
    testsupport::Rng rng(61);
    for (int it = 0; it < 20; ++it) {
        const Dataset ds = testsupport::synthetic_dataset_min_groups(40 + rng.index(100), 1000 + it, 1);
        for (auto mode : {ParityMode::DP, ParityMode::EO}) {
            const GroupPartition p = partition_groups(ds, mode);
            std::set<std::size_t> seen;
            std::size_t total = 0;
            for (const auto& g : p.groups) {
                total += g.indices.size();
                seen.insert(g.indices.begin(), g.indices.end());
            }
            REQUIRE(total == ds.size());
            REQUIRE(seen.size() == ds.size());
            REQUIRE(*seen.rbegin() == ds.size() - 1);
        }
    }
}

TEST_CASE("export_csv writes features, protected attribute and label") {
    const Dataset ds = testsupport::synthetic_dataset(25, 13);
    const std::string dir = testsupport::scratch_dir("export");
    const std::string path = dir + "/snapshot.csv";
    export_csv(ds, path);

    const csv::Table t = csv::read_file(path);
    REQUIRE(t.header == std::vector<std::string>{"x0", "x1", "x2", "A", "Y"});
    REQUIRE(t.rows.size() == 25);
    // values round-trip exactly through the decimal encoding
    for (std::size_t i = 0; i < 5; ++i)
        REQUIRE(parse_double(t.rows[i][0]) == ds.features(i, 0));
}
