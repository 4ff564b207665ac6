#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "mdcn/dataset.hpp"
#include "mdcn/errors.hpp"
#include "mdcn/image.hpp"
#include "mdcn/rng.hpp"
#include "mdcn/synth.hpp"

using namespace mdcn;
namespace fs = std::filesystem;

namespace {

// Scratch directory freshly created per test case.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("mdcn_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_junk(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  const char junk[] = "not a png at all";
  std::fwrite(junk, 1, sizeof(junk), f);
  std::fclose(f);
}

bool images_equal(const ImageRGB& a, const ImageRGB& b) {
  if (!a.same_size(b)) return false;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    if (a.pixels[i] != b.pixels[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("png discovery is lexicographic and extension-filtered") {
  TempDir dir("list");
  save_png(dir.file("b.png"), synth_image(8, 8, 1));
  save_png(dir.file("a.png"), synth_image(8, 8, 2));
  save_png(dir.file("c.PNG"), synth_image(8, 8, 3));
  write_junk(dir.file("notes.txt"));
  const auto paths = list_pngs(dir.str());
  REQUIRE(paths.size() == 3);
  CHECK(fs::path(paths[0]).filename() == "a.png");
  CHECK(fs::path(paths[1]).filename() == "b.png");
  CHECK(fs::path(paths[2]).filename() == "c.PNG");
  CHECK_THROWS_AS(list_pngs(dir.file("missing_subdir")), ConfigError);
}

TEST_CASE("dataset degrades whole images once and keeps pairs aligned") {
  TempDir dir("align");
  ImageRGB hr = synth_image(64, 64, 77);
  save_png(dir.file("img.png"), hr);

  DatasetSpec spec;
  spec.hr_dir = dir.str();
  spec.scale = 2;
  spec.patch_size = 32;  // the full LR frame, so the crop offset must be 0
  spec.augment = false;
  PatchDataset ds(spec);
  REQUIRE(ds.size() == 1);
  CHECK(ds.warnings().empty());

  // Quantize through the PNG round trip before comparing.
  ImageRGB hr_disk = load_png(dir.file("img.png"));
  DegradePair expect = degrade(hr_disk, 2);
  CHECK(images_equal(ds.pair(0).lr, expect.lr));
  CHECK(images_equal(ds.pair(0).hr, expect.hr));

  RandomEngine rng(5);
  PatchBatch batch = ds.sample_batch(2, rng);
  REQUIRE(batch.lr.shape() == Shape4{2, 3, 32, 32});
  REQUIRE(batch.hr.shape() == Shape4{2, 3, 64, 64});
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t h = 0; h < 32; ++h) {
      for (int64_t w = 0; w < 32; ++w) {
        CHECK(batch.lr(0, c, h, w) == expect.lr.at(c, h, w));
      }
    }
    for (int64_t h = 0; h < 64; ++h) {
      for (int64_t w = 0; w < 64; ++w) {
        CHECK(batch.hr(0, c, h, w) == expect.hr.at(c, h, w));
      }
    }
  }
}

TEST_CASE("patch sampling stays within bounds at every offset") {
  TempDir dir("bounds");
  save_png(dir.file("img.png"), synth_image(41, 57, 9));

  DatasetSpec spec;
  spec.hr_dir = dir.str();
  spec.scale = 2;
  spec.patch_size = 8;
  spec.augment = true;
  PatchDataset ds(spec);
  // 41x57 crops to 40x56; LR is 20x28.
  CHECK(ds.pair(0).lr.height == 20);
  CHECK(ds.pair(0).lr.width == 28);

  RandomEngine rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    PatchBatch b = ds.sample_batch(4, rng);
    REQUIRE(b.lr.shape() == Shape4{4, 3, 8, 8});
    REQUIRE(b.hr.shape() == Shape4{4, 3, 16, 16});
    for (float v : b.lr.data()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("augmentation applies one shared transform to both patch members") {
  TempDir dir("aug");
  ImageRGB hr = synth_image(32, 32, 123);
  save_png(dir.file("img.png"), hr);

  DatasetSpec spec;
  spec.hr_dir = dir.str();
  spec.scale = 2;
  spec.patch_size = 16;  // whole frame again; only augmentation varies
  spec.augment = true;
  PatchDataset ds(spec);
  const ImageRGB& lr0 = ds.pair(0).lr;
  const ImageRGB& hr0 = ds.pair(0).hr;

  RandomEngine rng(3);
  std::vector<bool> seen(8, false);
  for (int rep = 0; rep < 40; ++rep) {
    PatchBatch b = ds.sample_batch(1, rng);
    ImageRGB blr(16, 16), bhr(32, 32);
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t h = 0; h < 16; ++h)
        for (int64_t w = 0; w < 16; ++w) blr.at(c, h, w) = b.lr(0, c, h, w);
      for (int64_t h = 0; h < 32; ++h)
        for (int64_t w = 0; w < 32; ++w) bhr.at(c, h, w) = b.hr(0, c, h, w);
    }
    int matched = -1;
    for (int k = 0; k < 8; ++k) {
      if (images_equal(blr, dihedral_apply(lr0, k))) {
        matched = k;
        break;
      }
    }
    REQUIRE(matched >= 0);
    CHECK(images_equal(bhr, dihedral_apply(hr0, matched)));
    seen[static_cast<size_t>(matched)] = true;
  }
  int distinct = 0;
  for (bool s : seen) distinct += s ? 1 : 0;
  CHECK(distinct >= 4);  // 40 draws cover most of the 8 transforms
}

TEST_CASE("unreadable and undersized images are skipped with warnings") {
  TempDir dir("skip");
  save_png(dir.file("good.png"), synth_image(40, 40, 4));
  write_junk(dir.file("bad.png"));
  save_png(dir.file("small.png"), synth_image(8, 8, 5));

  DatasetSpec spec;
  spec.hr_dir = dir.str();
  spec.scale = 2;
  spec.patch_size = 16;
  PatchDataset ds(spec);
  CHECK(ds.size() == 1);
  REQUIRE(ds.warnings().size() == 2);
  CHECK(ds.warnings()[0].find("bad.png") != std::string::npos);
  CHECK(ds.warnings()[1].find("small.png") != std::string::npos);
}

TEST_CASE("datasets with no usable images are rejected") {
  TempDir dir("empty");
  CHECK_THROWS_AS(PatchDataset(DatasetSpec{dir.str(), 2, 16, false, false}),
                  ConfigError);
  write_junk(dir.file("only.png"));
  CHECK_THROWS_AS(PatchDataset(DatasetSpec{dir.str(), 2, 16, false, false}),
                  ConfigError);
}

TEST_CASE("mean subtraction centers batches on the dataset means") {
  TempDir dir("mean");
  ImageRGB flat(32, 32);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t h = 0; h < 32; ++h)
      for (int64_t w = 0; w < 32; ++w)
        flat.at(c, h, w) = 0.2f + 0.1f * static_cast<float>(c);
  save_png(dir.file("flat.png"), flat);

  DatasetSpec spec;
  spec.hr_dir = dir.str();
  spec.scale = 2;
  spec.patch_size = 8;
  spec.augment = false;
  spec.subtract_mean = true;
  PatchDataset ds(spec);
  CHECK(ds.channel_means()[0] == doctest::Approx(0.2).epsilon(1e-3));
  CHECK(ds.channel_means()[2] == doctest::Approx(0.4).epsilon(1e-3));

  RandomEngine rng(8);
  PatchBatch b = ds.sample_batch(2, rng);
  for (float v : b.lr.data()) CHECK(v == doctest::Approx(0.0).epsilon(1e-5));
  for (float v : b.hr.data()) CHECK(v == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("synthetic images are deterministic, sized, and in range") {
  ImageRGB a = synth_image(24, 18, 42);
  ImageRGB b = synth_image(24, 18, 42);
  ImageRGB c = synth_image(24, 18, 43);
  REQUIRE(a.height == 24);
  REQUIRE(a.width == 18);
  CHECK(images_equal(a, b));
  CHECK_FALSE(images_equal(a, c));
  for (float v : a.pixels) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  // Content must not be flat.
  float lo = 1.0f, hi = 0.0f;
  for (float v : a.pixels) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo > 0.2f);
}

TEST_CASE("integer translation shifts content exactly in the interior") {
  ImageRGB img = synth_image(16, 16, 6);
  ImageRGB shifted = translate_image(img, 1.0, 0.0);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t h = 2; h < 13; ++h)
      for (int64_t w = 2; w < 14; ++w)
        CHECK(shifted.at(c, h, w) ==
              doctest::Approx(img.at(c, h + 1, w)).epsilon(1e-6));
}

TEST_CASE("fractional translation reproduces linear ramps exactly") {
  // The Keys kernel is exact on affine signals, so a translated ramp is the
  // ramp evaluated at the shifted coordinates.
  ImageRGB ramp(12, 12);
  auto val = [](int64_t h, int64_t w) {
    return 0.2f + 0.03f * static_cast<float>(h) + 0.02f * static_cast<float>(w);
  };
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t h = 0; h < 12; ++h)
      for (int64_t w = 0; w < 12; ++w) ramp.at(c, h, w) = val(h, w);
  ImageRGB moved = translate_image(ramp, 0.5, 0.25);
  for (int64_t h = 3; h < 9; ++h)
    for (int64_t w = 3; w < 9; ++w)
      CHECK(moved.at(1, h, w) ==
            doctest::Approx(0.2 + 0.03 * (h + 0.5) + 0.02 * (w + 0.25))
                .epsilon(1e-5));
}

TEST_CASE("synthetic sequences slide one scene by a constant step") {
  const auto seq = synth_sequence(20, 24, 5, 1.0, 0.0, 99);
  REQUIRE(seq.size() == 5);
  for (const auto& f : seq) {
    REQUIRE(f.height == 20);
    REQUIRE(f.width == 24);
  }
  // Integer steps make consecutive frames exact shifts of each other.
  for (size_t t = 0; t + 1 < seq.size(); ++t) {
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t h = 4; h < 16; ++h)
        for (int64_t w = 4; w < 20; ++w)
          CHECK(seq[t + 1].at(c, h, w) ==
                doctest::Approx(seq[t].at(c, h + 1, w)).epsilon(1e-5));
  }
  // Zero step collapses to identical frames.
  const auto still = synth_sequence(12, 12, 3, 0.0, 0.0, 7);
  CHECK(images_equal(still[0], still[1]));
  CHECK(images_equal(still[1], still[2]));
}
