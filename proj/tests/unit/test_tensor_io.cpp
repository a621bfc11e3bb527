#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <sstream>

#include "kanbev/error.hpp"
#include "kanbev/io.hpp"
#include "kanbev/metrics.hpp"
#include "kanbev/tensor.hpp"
#include "test_support.hpp"

namespace {

using namespace kanbev;

TEST(Tensor, RejectsZeroExtentAndEmptyShape) {
  EXPECT_THROW(Tensor({2, 0, 3}), ValidationError);
  EXPECT_THROW(Tensor(Shape{}), ValidationError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), ValidationError);
}

TEST(Tensor, RowMajorIndexing) {
  Tensor t({2, 3, 4});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  EXPECT_EQ(t(1, 2, 3), 1 * 12 + 2 * 4 + 3);
  EXPECT_EQ(t(0, 1, 0), 4);
  EXPECT_THROW(t(2, 0, 0), ValidationError);
}

TEST(Tensor, TnsrRoundTripIsBitExact) {
  SplitMix64 rng(5);
  const Tensor t = testkit::random_tensor({3, 5, 7}, rng);
  std::stringstream ss;
  write_tensor(ss, t);
  const Tensor back = read_tensor(ss);
  EXPECT_EQ(back, t);
  EXPECT_EQ(tensor_checksum(back), tensor_checksum(t));
}

TEST(Tensor, TnsrHeaderLayout) {
  const Tensor t({2, 1}, std::vector<double>{1.5, -2.0});
  std::stringstream ss;
  write_tensor(ss, t);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4u + 4u + 2 * 4u + 2 * 8u);
  EXPECT_EQ(bytes.substr(0, 4), "TNSR");
  auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
    return v;
  };
  EXPECT_EQ(u32(4), 2u);
  EXPECT_EQ(u32(8), 2u);
  EXPECT_EQ(u32(12), 1u);
  std::uint64_t raw = 0;
  for (int i = 0; i < 8; ++i) raw |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[16 + i])) << (8 * i);
  EXPECT_EQ(std::bit_cast<double>(raw), 1.5);
}

TEST(Tensor, TnsrRejectsBadMagicAndTruncation) {
  std::stringstream bad("XXXX\x01\x00\x00\x00");
  EXPECT_THROW(read_tensor(bad), IoError);
  const Tensor t({4});
  std::stringstream ss;
  write_tensor(ss, t);
  std::string s = ss.str();
  s.resize(s.size() - 3);
  std::stringstream cut(s);
  EXPECT_THROW(read_tensor(cut), IoError);
}

TEST(Pc4d, HeaderAndPayloadLayout) {
  pillars::RadarPointCloud c;
  c.points = {{1.0, 2.0, 3.0, 0.5}, {-4.0, 0.25, 8.0, 1.0}};
  std::stringstream ss;
  io::write_pc4d(ss, c);
  const std::string b = ss.str();
  ASSERT_EQ(b.size(), 16u + 2 * 16u);
  EXPECT_EQ(b.substr(0, 4), "PC4D");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 2);
  for (int i = 5; i < 16; ++i) EXPECT_EQ(b[static_cast<std::size_t>(i)], 0);
  float f;
  std::memcpy(&f, b.data() + 16 + 4 * 4, 4);  // little-endian host
  EXPECT_EQ(f, -4.0f);
}

TEST(Pc4d, RoundTripAtFloatPrecision) {
  SplitMix64 rng(9);
  pillars::RadarPointCloud c;
  for (int i = 0; i < 100; ++i) c.points.push_back({rng.normal() * 20, rng.normal() * 20, rng.normal(), rng.uniform()});
  std::stringstream ss;
  io::write_pc4d(ss, c);
  const auto back = io::read_pc4d(ss);
  ASSERT_EQ(back.points.size(), c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    for (int k = 0; k < 4; ++k) EXPECT_EQ(back.points[i][k], static_cast<double>(static_cast<float>(c.points[i][k])));
  }
}

TEST(Pc4d, RejectsBadMagicAndLengthMismatch) {
  std::stringstream bad(std::string("PC3D") + std::string(12, '\0'));
  EXPECT_THROW(io::read_pc4d(bad), IoError);
  pillars::RadarPointCloud c;
  c.points = {{1, 2, 3, 4}};
  std::stringstream ss;
  io::write_pc4d(ss, c);
  std::stringstream longer(ss.str() + "abcd");
  EXPECT_THROW(io::read_pc4d(longer), IoError);
  std::stringstream shorter(ss.str().substr(0, 20));
  EXPECT_THROW(io::read_pc4d(shorter), IoError);
}

TEST(CsvCloud, ParsesHeaderedRows) {
  std::stringstream in("x,y,z,r\n1,2,3,4\n-0.5, 1e1 ,0,0.25\n");
  const auto c = io::read_csv_cloud(in);
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points[1][0], -0.5);
  EXPECT_EQ(c.points[1][1], 10.0);
  std::stringstream no_header("1,2,3,4\n");
  EXPECT_THROW(io::read_csv_cloud(no_header), IoError);
  std::stringstream short_row("x,y,z,r\n1,2,3\n");
  EXPECT_THROW(io::read_csv_cloud(short_row), IoError);
}

DetectionBox sample_box(int cls, double score) {
  DetectionBox b;
  b.center = Vec3(1.25, -3.5, 0.75);
  b.size = Vec3(1.9, 4.5, 1.6);
  b.yaw = 0.3;
  b.velocity = {1.0, -0.5};
  b.class_id = cls;
  b.score = score;
  const auto& info = metrics::detection_classes()[static_cast<std::size_t>(cls)];
  b.attribute_id = info.attributes.empty() ? -1 : 0;
  return b;
}

TEST(BoxesJson, RoundTripKeepsEveryField) {
  io::BoxesByToken boxes;
  boxes["s1"] = {sample_box(0, 0.9), sample_box(8, 0.125)};
  boxes["s2"] = {};
  const auto back = io::boxes_from_json(io::boxes_to_json(boxes, true), true);
  ASSERT_EQ(back.size(), 2u);
  ASSERT_EQ(back.at("s1").size(), 2u);
  const auto& a = boxes["s1"][1];
  const auto& b = back.at("s1")[1];
  EXPECT_EQ(a.center, b.center);
  EXPECT_EQ(a.size, b.size);
  EXPECT_EQ(a.yaw, b.yaw);
  EXPECT_EQ(a.velocity, b.velocity);
  EXPECT_EQ(a.class_id, b.class_id);
  EXPECT_EQ(a.score, b.score);
  EXPECT_EQ(b.attribute_id, -1);
  EXPECT_EQ(back.at("s1")[0].attribute_id, 0);
  // Serialization is stable.
  EXPECT_EQ(io::boxes_to_json(back, true), io::boxes_to_json(boxes, true));
}

TEST(BoxesJson, GroundTruthOmitsScore) {
  io::BoxesByToken boxes;
  boxes["s"] = {sample_box(1, 0.4)};
  const std::string text = io::boxes_to_json(boxes, false);
  EXPECT_EQ(text.find("detection_score"), std::string::npos);
  EXPECT_THROW(io::boxes_from_json(text, true), ValidationError);
  EXPECT_NO_THROW(io::boxes_from_json(text, false));
}

TEST(BoxesJson, RejectsUnknownClassAndAttribute) {
  EXPECT_THROW(io::boxes_from_json(R"({"results":{"s":[{"translation":[0,0,0],"size":[1,1,1],"yaw":0,
    "velocity":[0,0],"detection_name":"tram","detection_score":0.5,"attribute_name":""}]}})", true),
               ValidationError);
  EXPECT_THROW(io::boxes_from_json(R"({"results":{"s":[{"translation":[0,0,0],"size":[1,1,1],"yaw":0,
    "velocity":[0,0],"detection_name":"car","detection_score":0.5,"attribute_name":"cycle.with_rider"}]}})", true),
               ValidationError);
  EXPECT_THROW(io::boxes_from_json("{not json", true), ValidationError);
}

TEST(BoxesJson, TokenMismatchIsAnError) {
  io::BoxesByToken preds, gts;
  preds["a"] = {sample_box(0, 0.5)};
  gts["b"] = {sample_box(0, 1.0)};
  std::vector<metrics::EvalBox> p, g;
  EXPECT_THROW(io::to_eval_boxes(preds, gts, p, g), ValidationError);
}

TEST(BoxesJson, EmptyPredictionsGiveZeroMap) {
  io::BoxesByToken preds, gts;
  gts["a"] = {sample_box(0, 1.0)};
  std::vector<metrics::EvalBox> p, g;
  io::to_eval_boxes(preds, gts, p, g);
  const auto s = metrics::evaluate(p, g);
  EXPECT_EQ(s.mean_ap, 0.0);
}

}  // namespace
