#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "fedsd/blobs.hpp"
#include "fedsd/dataset.hpp"
#include "fedsd/dataset_io.hpp"
#include "fedsd/rng.hpp"

using namespace fedsd;

namespace {

LabeledDataset with_counts(const std::vector<std::size_t>& counts, std::size_t dim = 2) {
  LabeledDataset d(dim, counts.size());
  for (std::size_t y = 0; y < counts.size(); ++y)
    for (std::size_t i = 0; i < counts[y]; ++i) d.add({std::vector<double>(dim, static_cast<double>(i)), static_cast<int>(y)});
  return d;
}

}  // namespace

TEST(Histogram, CatsAndDogs) {
  const auto d = with_counts({250, 100, 0});
  EXPECT_EQ(histogram(d).counts(), (std::vector<std::size_t>{250, 100, 0}));
}

TEST(Histogram, EmptyDataset) {
  LabeledDataset d(4, 3);
  EXPECT_EQ(histogram(d).counts(), (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(histogram(d).total(), 0u);
}

TEST(Histogram, MatchesIndependentTally) {
  Rng rng(2024);
  LabeledDataset d(3, 7);
  std::vector<std::size_t> tally(7, 0);
  for (int i = 0; i < 1000; ++i) {
    const int y = static_cast<int>(rng.below(7));
    d.add({{rng.normal(), rng.normal(), rng.normal()}, y});
  }
  for (std::size_t i = 0; i < d.size(); ++i) tally[static_cast<std::size_t>(d[i].label)] += 1;
  const auto h = histogram(d);
  EXPECT_EQ(h.counts(), tally);
  EXPECT_EQ(h.total(), d.size());
}

TEST(Dataset, RejectsDimensionAndLabelViolations) {
  LabeledDataset d(2, 3);
  EXPECT_THROW(d.add({{1.0}, 0}), DataError);
  EXPECT_THROW(d.add({{1.0, 2.0}, 3}), DataError);
  EXPECT_THROW(d.add({{1.0, 2.0}, -1}), DataError);
}

TEST(MinMaxScaler, MapsToUnitInterval) {
  LabeledDataset d(2, 1);
  d.add({{0.0, 5.0}, 0});
  d.add({{10.0, 5.0}, 0});
  d.add({{5.0, 5.0}, 0});
  const auto s = MinMaxScaler::fit(d).transform(d);
  EXPECT_DOUBLE_EQ(s[0].features[0], 0.0);
  EXPECT_DOUBLE_EQ(s[1].features[0], 1.0);
  EXPECT_DOUBLE_EQ(s[2].features[0], 0.5);
  EXPECT_DOUBLE_EQ(s[2].features[1], 0.0);  // constant feature
}

TEST(DatasetIo, CsvRoundTripIsExact) {
  const auto d = make_blobs(BlobsSpec{4, 3, 2.0, 0.5, {}}, 25, 17);
  std::stringstream ss;
  write_dataset_csv(ss, d);
  const auto back = read_dataset_csv(ss);
  EXPECT_EQ(back.samples(), d.samples());
  EXPECT_EQ(back.num_classes(), 4u);
}

TEST(DatasetIo, BinaryLayoutIsBitExact) {
  LabeledDataset d(2, 3);
  d.add({{1.5, -2.0}, 2});
  std::stringstream ss;
  write_dataset_binary(ss, d);
  const std::string bytes = ss.str();
  const std::string expected(
      "\x02\x00\x00\x00"                  // D
      "\x03\x00\x00\x00"                  // L
      "\x01\x00\x00\x00\x00\x00\x00\x00"  // count
      "\x00\x00\xc0\x3f"                  // 1.5f
      "\x00\x00\x00\xc0"                  // -2.0f
      "\x02\x00\x00\x00",                 // label
      28);
  EXPECT_EQ(bytes, expected);
  std::stringstream in(bytes);
  EXPECT_EQ(read_dataset_binary(in).samples(), d.samples());
}

TEST(DatasetIo, BinaryRejectsTruncationAndTrailingBytes) {
  LabeledDataset d(2, 3);
  d.add({{1.5, -2.0}, 2});
  std::stringstream ss;
  write_dataset_binary(ss, d);
  const auto bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_dataset_binary(truncated), DataError);
  std::stringstream trailing(bytes + "x");
  EXPECT_THROW(read_dataset_binary(trailing), DataError);
}

TEST(DatasetIo, CsvRejectsBadRows) {
  std::stringstream wrong_count("2,2,2\n1,2,0\n");
  EXPECT_THROW(read_dataset_csv(wrong_count), DataError);
  std::stringstream wrong_width("2,2,1\n1,0\n");
  EXPECT_THROW(read_dataset_csv(wrong_width), DataError);
  std::stringstream bad_label("2,2,1\n1,2,5\n");
  EXPECT_THROW(read_dataset_csv(bad_label), DataError);
}

TEST(DatasetIo, FileDispatchByExtension) {
  const auto dir = std::filesystem::temp_directory_path() / "fedsd_test_io";
  std::filesystem::create_directories(dir);
  const auto d = make_blobs(BlobsSpec{3, 2, 2.0, 0.5, {}}, 5, 1);
  save_dataset(dir / "d.csv", d);
  save_dataset(dir / "d.bin", d);
  EXPECT_EQ(load_dataset(dir / "d.csv").samples(), d.samples());
  // binary stores float32
  const auto b = load_dataset(dir / "d.bin");
  ASSERT_EQ(b.size(), d.size());
  EXPECT_FLOAT_EQ(static_cast<float>(b[3].features[1]), static_cast<float>(d[3].features[1]));
  std::filesystem::remove_all(dir);
}

TEST(Blobs, CentersAreSharedAcrossSeeds) {
  BlobsSpec spec{5, 4, 3.0, 0.1, {}};
  const auto a = make_blobs(spec, 200, 1), b = make_blobs(spec, 200, 2);
  const auto centers = blob_centers(spec);
  std::size_t agree = 0;
  for (const auto& s : b) agree += nearest_center(s.features, centers) == s.label;
  EXPECT_EQ(agree, b.size());
  EXPECT_NE(a[0].features, b[0].features);
}
