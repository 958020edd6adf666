#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "annotation_service.hpp"

// After the project headers: resolv.h, pulled in by httplib, defines macros
// that clash with Eigen identifiers.
#include <httplib.h>
#include <json.hpp>

#include "png.hpp"
#include "momoc/io.hpp"
#include "momoc/metrics.hpp"
#include "momoc/phantom.hpp"

namespace momoc::service {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<NamedVolume> items(std::size_t n) {
  std::vector<NamedVolume> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"recon_" + std::to_string(i), make_phantom(PhantomKind::kBlobs, Dims{16, 18, 20}, i + 1)});
  }
  return out;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("momoc_svc_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    log_ = dir_ / "comparisons.jsonl";
  }
  void TearDown() override { fs::remove_all(dir_); }

  static json body(const Reply& r) { return json::parse(r.body); }
  static std::string post(const std::string& token, const std::string& outcome,
                          const std::string& annotator = "r1") {
    return json{{"pair_token", token}, {"outcome", outcome}, {"annotator", annotator}}.dump();
  }

  fs::path dir_;
  fs::path log_;
};

TEST_F(ServiceTest, NextPairIsIdempotentUntilAnswered) {
  AnnotationService svc(items(4), log_, 1);
  EXPECT_EQ(svc.n_total(), 6u);
  const auto a = body(svc.next_pair());
  const auto b = body(svc.next_pair());
  EXPECT_EQ(a, b);
  EXPECT_EQ(a["n_done"], 0);
  EXPECT_EQ(a["n_total"], 6);
  EXPECT_EQ(svc.post_comparison(post(a["pair_token"], "similar")).status, 201);
  EXPECT_NE(body(svc.next_pair())["pair_token"], a["pair_token"]);
}

TEST_F(ServiceTest, PayloadsAreBlinded) {
  AnnotationService svc(items(3), log_, 2);
  const auto r = svc.next_pair();
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r.body.find("recon_" + std::to_string(i)), std::string::npos);
  const auto j = json::parse(r.body);
  const std::string left = j["left_id_opaque"], right = j["right_id_opaque"];
  EXPECT_EQ(left.size(), 32u);
  EXPECT_NE(left, right);
  EXPECT_EQ(svc.slice("recon_0", "z", "0").status, 404);
}

TEST_F(ServiceTest, SlicesArePng) {
  AnnotationService svc(items(2), log_, 3);
  const auto j = body(svc.next_pair());
  const std::string id = j["left_id_opaque"];
  for (const char* axis : {"x", "y", "z"}) {
    const auto r = svc.slice(id, axis, "5");
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(r.content_type, "image/png");
    EXPECT_EQ(r.body.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  }
  // Width and height from the IHDR chunk: axis y shows z rows and x columns.
  const auto png = svc.slice(id, "y", "0").body;
  auto be32 = [&](std::size_t off) {
    return (std::uint32_t(std::uint8_t(png[off])) << 24) | (std::uint32_t(std::uint8_t(png[off + 1])) << 16) |
           (std::uint32_t(std::uint8_t(png[off + 2])) << 8) | std::uint32_t(std::uint8_t(png[off + 3]));
  };
  EXPECT_EQ(be32(16), 20u);
  EXPECT_EQ(be32(20), 18u);
}

TEST_F(ServiceTest, SliceErrors) {
  AnnotationService svc(items(2), log_, 3);
  const std::string id = body(svc.next_pair())["left_id_opaque"];
  const auto r = svc.slice(id, "y", "16");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(body(r)["error"], "slice index 16 out of range [0, 15] for axis y");
  EXPECT_EQ(svc.slice(id, "w", "0").status, 400);
  EXPECT_EQ(svc.slice(id, "x", "-1").status, 400);
  EXPECT_EQ(svc.slice(id, "x", "abc").status, 400);
}

TEST_F(ServiceTest, MalformedSubmissions) {
  AnnotationService svc(items(3), log_, 4);
  const std::string token = body(svc.next_pair())["pair_token"];
  for (const std::string& bad :
       {std::string("not json"), std::string("[1,2]"), json{{"pair_token", token}}.dump(), post(token, "worse"),
        post(token, "similar", ""), json{{"pair_token", 5}, {"outcome", "similar"}, {"annotator", "r"}}.dump()}) {
    const auto r = svc.post_comparison(bad);
    EXPECT_EQ(r.status, 400) << bad;
    EXPECT_TRUE(body(r).contains("error")) << bad;
  }
  EXPECT_FALSE(fs::exists(log_));
  EXPECT_EQ(svc.post_comparison(post("deadbeef", "similar")).status, 409);
  EXPECT_EQ(svc.post_comparison(post(token, "left_worse")).status, 201);
  EXPECT_EQ(svc.post_comparison(post(token, "left_worse")).status, 409);
}

TEST_F(ServiceTest, LoggedRecordsFollowScreenPositions) {
  AnnotationService svc(items(3), log_, 5);
  const auto pair = body(svc.next_pair());
  const auto reply = svc.post_comparison(post(pair["pair_token"], "right_worse"));
  ASSERT_EQ(reply.status, 201);
  EXPECT_EQ(body(reply)["n_done"], 1);
  const auto recs = parse_comparisons_jsonl(read_text_file(log_));
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].outcomes, std::vector<Outcome>{Outcome::kBWorse});
  EXPECT_EQ(recs[0].annotator, "r1");
  // The left image is item_a: its slice equals that item's own rendering.
  const auto its = items(3);
  const auto& a = *std::find_if(its.begin(), its.end(), [&](const NamedVolume& v) { return v.id == recs[0].item_a; });
  const auto norm = normalize_percentile(a.image);
  std::vector<std::uint8_t> px(16 * 20);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 20; ++x)
      px[y * 20 + x] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(norm.at(y, 4, x), 0.0, 1.0)));
  EXPECT_EQ(svc.slice(pair["left_id_opaque"], "z", "4").body, encode_png_gray8(px, 20, 16));
  EXPECT_NE(svc.slice(pair["right_id_opaque"], "z", "4").body, encode_png_gray8(px, 20, 16));
}

TEST_F(ServiceTest, PmasReadsItsOwnWrites) {
  AnnotationService svc(items(4), log_, 6);
  EXPECT_EQ(body(svc.pmas())["n_comparisons"], 0);
  std::size_t answered = 0;
  while (true) {
    const auto p = body(svc.next_pair());
    if (p["pair_token"].is_null()) break;
    ASSERT_EQ(svc.post_comparison(post(p["pair_token"], answered % 3 == 0 ? "similar" : "left_worse")).status,
              201);
    ++answered;
    const auto s = body(svc.pmas());
    EXPECT_EQ(s["n_comparisons"], answered);
  }
  EXPECT_EQ(answered, 6u);
  const auto done = body(svc.next_pair());
  EXPECT_EQ(done["n_done"], 6);
  EXPECT_TRUE(done["left_id_opaque"].is_null());

  const auto recs = parse_comparisons_jsonl(read_text_file(log_));
  ASSERT_EQ(recs.size(), 6u);
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& r : recs) pairs.insert(std::minmax(r.item_a, r.item_b));
  EXPECT_EQ(pairs.size(), 6u);

  const auto direct = fit_bt(recs);
  const auto served = body(svc.pmas());
  EXPECT_EQ(served["converged"], direct.converged);
  for (const auto& [id, b] : direct.beta) EXPECT_NEAR(served["scores"][id].get<double>(), b, 1e-9);
}

TEST_F(ServiceTest, ResumesFromExistingLog) {
  {
    AnnotationService svc(items(4), log_, 7);
    for (int i = 0; i < 2; ++i) {
      const auto p = body(svc.next_pair());
      ASSERT_EQ(svc.post_comparison(post(p["pair_token"], "similar")).status, 201);
    }
  }
  AnnotationService again(items(4), log_, 7);
  EXPECT_EQ(body(again.next_pair())["n_done"], 2);
  std::size_t more = 0;
  while (!body(again.next_pair())["pair_token"].is_null()) {
    ASSERT_EQ(again.post_comparison(post(body(again.next_pair())["pair_token"], "similar")).status, 201);
    ++more;
  }
  EXPECT_EQ(more, 4u);
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& r : parse_comparisons_jsonl(read_text_file(log_))) pairs.insert(std::minmax(r.item_a, r.item_b));
  EXPECT_EQ(pairs.size(), 6u);
}

TEST_F(ServiceTest, RejectsTooFewOrDuplicateItems) {
  EXPECT_THROW(AnnotationService(items(1), log_, 0), Error);
  auto dup = items(2);
  dup[1].id = dup[0].id;
  EXPECT_THROW(AnnotationService(dup, log_, 0), Error);
}

TEST_F(ServiceTest, LoadsItemsFromDirectory) {
  const auto its = items(2);
  write_volume(dir_ / "vols" / "b.pmv", its[0].image);
  write_nifti(dir_ / "vols" / "a.nii", its[1].image);
  write_text_file(dir_ / "vols" / "notes.txt", "skip");
  const auto loaded = AnnotationService::load_items(dir_ / "vols");
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded[0].id, "a");
  EXPECT_EQ(loaded[1].id, "b");
}

TEST_F(ServiceTest, HttpEndToEnd) {
  AnnotationService svc(items(3), log_, 8);
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Get("/api/pairs/next");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto pair = json::parse(res->body);
  const std::string left = pair["left_id_opaque"];

  res = cli.Get("/api/slices/" + left + "/z/3.png");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(res->body.substr(1, 3), "PNG");

  res = cli.Get("/api/slices/" + left + "/z/99.png");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  res = cli.Post("/api/comparisons", "{oops", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_TRUE(json::parse(res->body).contains("error"));

  res = cli.Post("/api/comparisons", post(pair["pair_token"], "left_worse"), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  res = cli.Post("/api/comparisons", post(pair["pair_token"], "left_worse"), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);

  res = cli.Get("/api/pmas");
  ASSERT_TRUE(res);
  const auto scores = json::parse(res->body);
  EXPECT_EQ(scores["n_comparisons"], 1);
  EXPECT_EQ(scores["scores"].size(), 2u);

  res = cli.Get("/api/nothing");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);

  server.stop();
  th.join();
}

}  // namespace
}  // namespace momoc::service
