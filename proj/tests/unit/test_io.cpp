#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "momoc/io.hpp"
#include "test_util.hpp"

namespace momoc {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("momoc_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

ComplexVolume as_float(const ComplexVolume& v) {
  ComplexVolume out = v;
  for (auto& z : out) z = {double(float(z.real())), double(float(z.imag()))};
  return out;
}

TEST_F(IoTest, ComplexRoundTrip) {
  const auto v = testing::random_complex(Dims{5, 6, 7}, 1);
  write_volume(dir_ / "c.pmv", v, R"({"note":"x"})");
  EXPECT_EQ(read_complex_volume(dir_ / "c.pmv"), as_float(v));
  const auto f = read_pmv(dir_ / "c.pmv");
  EXPECT_EQ(f.dtype, "c64");
  EXPECT_EQ(f.dims, (std::vector<std::size_t>{5, 6, 7}));
  EXPECT_EQ(nlohmann::json::parse(f.meta_json)["note"], "x");
  EXPECT_EQ(fs::file_size(dir_ / "c.pmv"), read_text_file(dir_ / "c.pmv").find('\n') + 1 + 5 * 6 * 7 * 8);
}

TEST_F(IoTest, HeaderIsFirstLine) {
  write_volume(dir_ / "r.pmv", RealVolume(Dims{2, 3, 4}, 1.5));
  std::ifstream in(dir_ / "r.pmv");
  std::string line;
  std::getline(in, line);
  const auto h = nlohmann::json::parse(line);
  EXPECT_EQ(h["magic"], "PMV1");
  EXPECT_EQ(h["dtype"], "f32");
  EXPECT_EQ(h["endianness"], "little");
  EXPECT_EQ(h["dims"], nlohmann::json({2, 3, 4}));
}

TEST_F(IoTest, RealRoundTripAndMagnitudeOfComplex) {
  const auto r = testing::random_real(Dims{4, 4, 4}, 2);
  write_volume(dir_ / "r.pmv", r);
  const auto back = read_real_volume(dir_ / "r.pmv");
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(back[i], double(float(r[i])));
  const auto c = testing::random_complex(Dims{3, 3, 3}, 3);
  write_volume(dir_ / "c.pmv", c);
  const auto mag = read_real_volume(dir_ / "c.pmv");
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(mag[i], std::abs(c[i]), 1e-6);
}

TEST_F(IoTest, StackedVolumes) {
  std::vector<ComplexVolume> vols{testing::random_complex(Dims{3, 4, 5}, 1), testing::random_complex(Dims{3, 4, 5}, 2)};
  write_volumes(dir_ / "s.pmv", vols);
  const auto back = read_volumes(dir_ / "s.pmv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1], as_float(vols[1]));
  EXPECT_EQ(read_pmv(dir_ / "s.pmv").dims, (std::vector<std::size_t>{2, 3, 4, 5}));
  EXPECT_THROW(read_complex_volume(dir_ / "s.pmv"), Error);
}

TEST_F(IoTest, CorruptFilesAreRejected) {
  write_volume(dir_ / "r.pmv", RealVolume(Dims{4, 4, 4}, 1.0));
  const auto text = read_text_file(dir_ / "r.pmv");
  write_text_file(dir_ / "short.pmv", text.substr(0, text.size() - 4));
  EXPECT_THROW(read_pmv(dir_ / "short.pmv"), Error);
  write_text_file(dir_ / "long.pmv", text + "xx");
  EXPECT_THROW(read_pmv(dir_ / "long.pmv"), Error);
  write_text_file(dir_ / "magic.pmv", R"({"magic":"PMV2","dtype":"f32","dims":[1,1,1]})" "\n\0\0\0\0");
  EXPECT_THROW(read_pmv(dir_ / "magic.pmv"), Error);
  write_text_file(dir_ / "dtype.pmv", R"({"magic":"PMV1","dtype":"i16","dims":[1,1,1]})" "\n");
  EXPECT_THROW(read_pmv(dir_ / "dtype.pmv"), Error);
  EXPECT_THROW(read_pmv(dir_ / "missing.pmv"), Error);
}

TEST_F(IoTest, NiftiRoundTripAndAxisOrder) {
  const Dims d{4, 5, 6};
  const auto r = testing::random_real(d, 4);
  write_nifti(dir_ / "v.nii", r);
  const auto back = read_nifti(dir_ / "v.nii");
  ASSERT_EQ(back.dims(), d);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(back[i], double(float(r[i])));
  const auto bytes = read_text_file(dir_ / "v.nii");
  std::int16_t dim[4];
  std::memcpy(dim, bytes.data() + 40, sizeof dim);
  EXPECT_EQ(dim[0], 3);
  EXPECT_EQ(dim[1], 6);  // x
  EXPECT_EQ(dim[2], 5);  // z
  EXPECT_EQ(dim[3], 4);  // y
  EXPECT_EQ(bytes.size(), 352u + d.size() * 4);
  // Extension-based dispatch.
  write_real_volume(dir_ / "w.nii", r);
  EXPECT_EQ(read_real_volume(dir_ / "w.nii"), back);
}

TEST_F(IoTest, NiftiScalingAndIntegerTypes) {
  const Dims d{2, 2, 2};
  write_nifti(dir_ / "v.nii", RealVolume(d, 0.0));
  auto bytes = read_text_file(dir_ / "v.nii");
  bytes.resize(352);
  const std::int16_t datatype = 4, bitpix = 16;  // int16
  std::memcpy(bytes.data() + 70, &datatype, 2);
  std::memcpy(bytes.data() + 72, &bitpix, 2);
  const float slope = 0.5f, inter = 1.0f;
  std::memcpy(bytes.data() + 112, &slope, 4);
  std::memcpy(bytes.data() + 116, &inter, 4);
  for (std::int16_t v = 0; v < 8; ++v) bytes.append(reinterpret_cast<const char*>(&v), 2);
  write_text_file(dir_ / "i.nii", bytes);
  const auto vol = read_nifti(dir_ / "i.nii");
  for (std::size_t i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(vol[i], 0.5 * double(i) + 1.0);
  write_text_file(dir_ / "bad.nii", std::string(100, '\0'));
  EXPECT_THROW(read_nifti(dir_ / "bad.nii"), Error);
}

}  // namespace
}  // namespace momoc
