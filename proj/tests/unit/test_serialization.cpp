#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cgrn/binary_io.hpp"
#include "cgrn/checkpoint.hpp"
#include "cgrn/tensor_io.hpp"
#include "test_support.hpp"

using namespace cgrn;
using cgrn::testing::bit_equal;
using cgrn::testing::random_tensor;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cgrn_ser_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir / name;
}

ParameterStore small_store(std::uint64_t seed) {
  ParameterStore s;
  s.add(Slice::Encoder, "w", random_tensor(Shape{2, 3}, seed, -1, 1, true));
  s.add(Slice::Classifier, "fc", random_tensor(Shape{4}, seed + 1, -1, 1, true));
  s.add_named(Slice::Generator, kFontEmbeddingPrefix + "table", random_tensor(Shape{3, 2}, seed + 2, -1, 1, true));
  s.add(Slice::Discriminator, "d", random_tensor(Shape{1, 1, 2, 2}, seed + 3, -1, 1, true));
  s.add_buffer(Slice::Encoder, "bn/mean", random_tensor(Shape{3}, seed + 4));
  return s;
}

}  // namespace

TEST(TensorDump, HeaderLayoutIsLittleEndian) {
  std::ostringstream os;
  write_tensor(os, Tensor::from(Shape{1, 2}, {1.0, -2.0}), DType::F64);
  const std::string b = os.str();
  ASSERT_EQ(b.size(), 4u + 1 + 1 + 2 * 4 + 2 * 8);
  EXPECT_EQ(b.substr(0, 4), "CGTN");
  EXPECT_EQ(b[4], 0);
  EXPECT_EQ(b[5], 2);
  EXPECT_EQ(std::string(b.data() + 6, 4), std::string("\x01\x00\x00\x00", 4));
  EXPECT_EQ(std::string(b.data() + 10, 4), std::string("\x02\x00\x00\x00", 4));
  double first;
  std::memcpy(&first, b.data() + 14, 8);
  EXPECT_EQ(first, 1.0);
}

TEST(TensorDump, RoundTripsBothDtypes) {
  Tensor t = random_tensor(Shape{2, 3, 4, 5}, 1);
  for (DType d : {DType::F64, DType::F32}) {
    std::stringstream ss;
    write_tensor(ss, t, d);
    Tensor back = read_tensor(ss);
    EXPECT_EQ(back.shape(), t.shape());
    if (d == native_dtype()) {
      EXPECT_TRUE(bit_equal(back, t));
    } else {
      EXPECT_LE(cgrn::testing::max_abs_diff(back, t), 1e-6);
    }
  }
  const auto path = scratch("t.cgtn");
  save_tensor(path, t);
  EXPECT_TRUE(bit_equal(load_tensor(path), t));
}

TEST(TensorDump, RejectsCorruptRecords) {
  std::stringstream bad_magic("CGTX\x00\x01\x01\x00\x00\x00");
  EXPECT_THROW(read_tensor(bad_magic), binary::FormatError);

  std::ostringstream os;
  write_tensor(os, Tensor::from(Shape{3}, {1, 2, 3}), DType::F64);
  std::string b = os.str();
  std::stringstream truncated(b.substr(0, b.size() - 3));
  EXPECT_THROW(read_tensor(truncated), binary::FormatError);

  b[4] = 7;
  std::stringstream bad_dtype(b);
  EXPECT_THROW(read_tensor(bad_dtype), binary::FormatError);
}

TEST(Checkpoint, RoundTripRestoresValuesMomentsAndFooter) {
  ParameterStore store = small_store(10);
  Adam opt_e(store.slice(Slice::Encoder), AdamConfig{});
  Adam opt_d(store.slice(Slice::Discriminator), AdamConfig{});
  for (auto& e : store.parameters()) {
    Tensor t = e.tensor;
    for (auto& g : t.ensure_grad()) g = Real(0.3);
  }
  opt_e.step();
  opt_d.step();
  opt_d.step();

  CheckpointFooter footer;
  footer.step = 42;
  footer.epoch = 3;
  footer.epoch_step = 7;
  footer.seed = 99;
  footer.optimizer_steps = {opt_e.steps(), opt_d.steps()};
  footer.rng_state = "1 2 3";
  const auto path = scratch("a.cgrn");
  write_checkpoint(path, store, {&opt_e, &opt_d}, footer);

  const Checkpoint ckpt = read_checkpoint(path);
  EXPECT_EQ(ckpt.footer, footer);
  EXPECT_EQ(ckpt.tensors.size(), store.parameters().size() + store.buffers().size());

  ParameterStore fresh = small_store(20);
  Adam fe(fresh.slice(Slice::Encoder), AdamConfig{});
  Adam fd(fresh.slice(Slice::Discriminator), AdamConfig{});
  restore_checkpoint(ckpt, fresh, {&fe, &fd});
  for (std::size_t i = 0; i < store.parameters().size(); ++i) {
    EXPECT_TRUE(bit_equal(fresh.parameters()[i].tensor, store.parameters()[i].tensor));
  }
  EXPECT_TRUE(bit_equal(fresh.buffers()[0].tensor, store.buffers()[0].tensor));
  EXPECT_TRUE(bit_equal(fd.slots()[0].m, opt_d.slots()[0].m));
  EXPECT_TRUE(bit_equal(fd.slots()[0].v, opt_d.slots()[0].v));

  const auto path2 = scratch("b.cgrn");
  write_checkpoint(path2, store, {&opt_e, &opt_d}, footer);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(sa.substr(0, 4), "CGRN");
}

TEST(Checkpoint, RejectsBadMagicAndShapeMismatch) {
  const auto junk = scratch("junk.cgrn");
  {
    std::ofstream os(junk, std::ios::binary);
    os << "NOPE0000";
  }
  EXPECT_THROW(read_checkpoint(junk), binary::FormatError);

  ParameterStore store = small_store(30);
  Adam opt(store.slice(Slice::Encoder), AdamConfig{});
  const auto path = scratch("c.cgrn");
  write_checkpoint(path, store, {&opt}, CheckpointFooter{});
  const Checkpoint ckpt = read_checkpoint(path);

  ParameterStore other;
  other.add(Slice::Encoder, "w", random_tensor(Shape{3, 2}, 1, -1, 1, true));
  Adam oo(other.slice(Slice::Encoder), AdamConfig{});
  EXPECT_THROW(restore_checkpoint(ckpt, other, {&oo}), binary::FormatError);

  ParameterStore extra = small_store(31);
  extra.add(Slice::Classifier, "more", random_tensor(Shape{2}, 2, -1, 1, true));
  Adam eo(extra.slice(Slice::Encoder), AdamConfig{});
  EXPECT_THROW(restore_checkpoint(ckpt, extra, {&eo}), binary::FormatError);
}
