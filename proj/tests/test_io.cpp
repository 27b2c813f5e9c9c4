#include "mpotrace/errors.hpp"
#include "mpotrace/io.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <algorithm>
#include <filesystem>

using namespace mpotrace;

namespace {
bool same_sites(const Mpo &a, const Mpo &b) {
    if(a.length() != b.length() || a.log_scale() != b.log_scale()) return false;
    for(Index k = 0; k < a.length(); ++k)
        if(a.site(k).shape() != b.site(k).shape() || !std::ranges::equal(a.site(k).data(), b.site(k).data())) return false;
    return true;
}
} // namespace

TEST(MpoJson, Layout) {
    const json doc = to_json(identity_mpo(2, 2));
    EXPECT_EQ(doc["kind"], "mpo");
    EXPECT_EQ(doc["L"], 2);
    EXPECT_EQ(doc["d"], 2);
    EXPECT_EQ(doc["log_scale"], 0.0);
    ASSERT_EQ(doc["sites"].size(), 2u);
    // (out, in, left, right) nesting with [re, im] leaves
    EXPECT_EQ(doc["sites"][0][1][1][0][0], json::array({1.0, 0.0}));
    EXPECT_EQ(doc["sites"][0][0][1][0][0], json::array({0.0, 0.0}));
}

TEST(MpoJson, RoundTripIsBitExact) {
    const Mpo m    = mpotrace::testing::random_mpo(5, 2, 3, 77, -1.234567890123);
    const Mpo back = mpo_from_json(json::parse(to_json(m).dump()));
    EXPECT_TRUE(same_sites(m, back));
}

TEST(MpsJson, RoundTrip) {
    const Mps v    = vectorize(mpotrace::testing::random_mpo(3, 2, 2, 5, 0.5));
    const json doc = to_json(v);
    EXPECT_EQ(doc["kind"], "mps");
    EXPECT_EQ(doc["d"], 4);
    const Mps back = mps_from_json(json::parse(doc.dump()));
    for(Index k = 0; k < 3; ++k) EXPECT_TRUE(std::ranges::equal(v.site(k).data(), back.site(k).data()));
    EXPECT_EQ(v.log_scale(), back.log_scale());
}

TEST(MpoJson, RejectsMalformed) {
    json doc = to_json(identity_mpo(2, 2));
    json bad = doc;
    bad["kind"] = "mps";
    EXPECT_THROW((void)mpo_from_json(bad), FormatError);
    bad = doc;
    bad.erase("sites");
    EXPECT_THROW((void)mpo_from_json(bad), FormatError);
    bad                    = doc;
    bad["sites"][0][0][0][0][0] = json::array({1.0});
    EXPECT_THROW((void)mpo_from_json(bad), FormatError);
    bad          = doc;
    bad["L"]     = 3;
    EXPECT_THROW((void)mpo_from_json(bad), FormatError);
    bad = doc;
    bad["sites"][1] = to_json(mpotrace::testing::random_mpo(2, 2, 2, 1))["sites"][1];
    EXPECT_THROW((void)mpo_from_json(bad), DimensionError);
}

TEST(MpoFile, MetadataIsCarried) {
    const auto path = std::filesystem::temp_directory_path() / "mpotrace_io_test.json";
    const Mpo  m    = mpotrace::testing::random_mpo(4, 2, 2, 3, 2.0);
    write_mpo(path, m, json{{"note", "x"}, {"steps", 5}});
    const auto doc = read_mpo(path);
    EXPECT_TRUE(same_sites(m, doc.mpo));
    EXPECT_EQ(doc.metadata["steps"], 5);
    std::filesystem::remove(path);
}

TEST(MpoFile, MissingFile) { EXPECT_THROW((void)read_mpo("/nonexistent/path.json"), std::runtime_error); }
