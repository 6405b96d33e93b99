#include "doctest.h"
#include "mdda/dataset.hpp"
#include "mdda/image_io.hpp"
#include "mdda/parallel.hpp"
#include "test_util.hpp"

#include <atomic>
#include <cmath>

using namespace mdda;

TEST_CASE("synthetic dataset shape and labels") {
  const LabeledDataset d = generate_lesion_dataset({32, 10, 5, "test"});
  CHECK(d.size() == 10);
  CHECK(d.num_classes() == 4);
  CHECK(d.split == "test");
  CHECK(d.class_names == lesion_class_names());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d.labels[i] == static_cast<int>(i % 4));
    CHECK(d.images[i].dims() == Dims{32, 32});
    CHECK(d.images[i].channels() == 1);
    for (double v : d.images[i].values()) {
      CHECK((v >= 0.0 && v <= 1.0));
      CHECK(v * 255.0 == std::round(v * 255.0));
    }
  }
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("synthetic dataset is deterministic") {
  const auto a = generate_lesion_dataset({16, 8, 1, "train"});
  const auto b = generate_lesion_dataset({16, 8, 1, "train"});
  const auto c = generate_lesion_dataset({16, 8, 2, "train"});
  CHECK(a.images == b.images);
  CHECK(a.images != c.images);
  CHECK_THROWS(generate_lesion_dataset({4, 8, 1, "train"}));
}

TEST_CASE("dataset directory round trip") {
  const auto dir = test::temp_dir("dataset") / "test";
  const auto d = generate_lesion_dataset({16, 6, 3, "test"});
  save_dataset(d, dir);
  CHECK(std::filesystem::exists(dir / "00000.pgm"));
  CHECK(test::read_file(dir / "labels.csv").substr(0, 21) == "file,label\n00000.pgm,");
  const auto back = load_dataset(dir);
  CHECK(back.images == d.images);
  CHECK(back.labels == d.labels);
  CHECK(back.class_names == d.class_names);
  CHECK(back.split == "test");
  CHECK_THROWS(load_dataset(dir / "missing"));
}

TEST_CASE("dataset validation") {
  LabeledDataset d;
  d.class_names = {"a", "b"};
  d.images.emplace_back(2, 2, 1);
  d.labels.push_back(2);
  CHECK_THROWS(d.validate());
  d.labels[0] = 1;
  d.images.emplace_back(3, 2, 1);
  d.labels.push_back(0);
  CHECK_THROWS(d.validate());
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  for (int jobs : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(10, 2,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}
