#include "annotation_service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

#include <httplib.h>
#include <json.hpp>

#include "momoc/io.hpp"
#include "momoc/metrics.hpp"
#include "png.hpp"

namespace momoc::service {
namespace {

Reply json_reply(int status, const nlohmann::json& j) { return {status, "application/json", j.dump()}; }

Reply error_reply(int status, const std::string& message) {
  return json_reply(status, {{"error", message}});
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

AnnotationService::AnnotationService(std::vector<NamedVolume> items, std::filesystem::path log_path,
                                     std::uint64_t seed, BtOptions bt)
    : log_path_(std::move(log_path)), bt_(bt), rng_(seed) {
  if (items.size() < 2) throw Error(ErrorCode::kInvalidInput, "annotation needs at least 2 items");
  std::set<std::string> seen;
  for (auto& it : items) {
    if (!seen.insert(it.id).second) {
      throw Error(ErrorCode::kInvalidInput, "duplicate item id '" + it.id + "'");
    }
    Item item{it.id, "", normalize_percentile(it.image)};
    do {
      item.opaque = random_hex();
    } while (by_opaque_.contains(item.opaque));
    by_opaque_[item.opaque] = items_.size();
    items_.push_back(std::move(item));
  }
  for (std::size_t i = 0; i < items_.size(); ++i) {
    for (std::size_t j = i + 1; j < items_.size(); ++j) order_.emplace_back(i, j);
  }
  std::shuffle(order_.begin(), order_.end(), rng_);
  answered_.assign(order_.size(), false);

  // Resume: pairs already in the log count as answered.
  for (const auto& r : records_locked()) {
    for (std::size_t k = 0; k < order_.size(); ++k) {
      const auto& a = items_[order_[k].first].id;
      const auto& b = items_[order_[k].second].id;
      if (!answered_[k] && ((r.item_a == a && r.item_b == b) || (r.item_a == b && r.item_b == a))) {
        answered_[k] = true;
        break;
      }
    }
  }
}

std::vector<NamedVolume> AnnotationService::load_items(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "'" + dir.string() + "' is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".pmv" || ext == ".nii")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<NamedVolume> out;
  for (const auto& f : files) out.push_back({f.stem().string(), read_real_volume(f)});
  return out;
}

std::string AnnotationService::random_hex() {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (int k = 0; k < 2; ++k) {
    std::uint64_t v = rng_();
    for (int i = 0; i < 16; ++i, v >>= 4) s.push_back(kHex[v & 0xF]);
  }
  return s;
}

std::size_t AnnotationService::n_done_locked() const {
  return static_cast<std::size_t>(std::count(answered_.begin(), answered_.end(), true));
}

std::vector<ComparisonRecord> AnnotationService::records_locked() const {
  if (!std::filesystem::exists(log_path_)) return {};
  return parse_comparisons_jsonl(read_text_file(log_path_));
}

Reply AnnotationService::next_pair() {
  std::lock_guard lock(mu_);
  nlohmann::json j;
  if (!pending_) {
    const auto it = std::find(answered_.begin(), answered_.end(), false);
    if (it != answered_.end()) {
      const bool left_first = (rng_() & 1U) == 0;
      pending_ = Pending{random_hex(), static_cast<std::size_t>(it - answered_.begin()), left_first};
    }
  }
  if (pending_) {
    const auto [i, k] = order_[pending_->pair];
    const std::size_t left = pending_->left_is_first ? i : k;
    const std::size_t right = pending_->left_is_first ? k : i;
    j["pair_token"] = pending_->token;
    j["left_id_opaque"] = items_[left].opaque;
    j["right_id_opaque"] = items_[right].opaque;
  } else {
    j["pair_token"] = nullptr;
    j["left_id_opaque"] = nullptr;
    j["right_id_opaque"] = nullptr;
  }
  j["n_done"] = n_done_locked();
  j["n_total"] = order_.size();
  return json_reply(200, j);
}

Reply AnnotationService::slice(const std::string& opaque, const std::string& axis,
                               const std::string& index) {
  const auto it = by_opaque_.find(opaque);
  if (it == by_opaque_.end()) return error_reply(404, "unknown volume id");
  if (axis != "x" && axis != "y" && axis != "z") {
    return error_reply(400, "axis must be one of x, y, z");
  }
  if (index.empty() || index.size() > 9 ||
      !std::all_of(index.begin(), index.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return error_reply(400, "slice index must be a non-negative integer");
  }
  const RealVolume& vol = items_[it->second].normalized;
  const Dims d = vol.dims();
  const std::size_t idx = std::stoul(index);
  const std::size_t extent = axis == "y" ? d.ny : (axis == "z" ? d.nz : d.nx);
  if (idx >= extent) {
    return error_reply(400, "slice index " + index + " out of range [0, " +
                                std::to_string(extent - 1) + "] for axis " + axis);
  }
  // Rows and columns are the two remaining storage axes in order.
  std::size_t rows = 0, cols = 0;
  auto voxel = [&](std::size_t r, std::size_t c) {
    if (axis == "x") return vol.at(r, c, idx);
    if (axis == "y") return vol.at(idx, r, c);
    return vol.at(r, idx, c);
  };
  if (axis == "x") {
    rows = d.ny;
    cols = d.nz;
  } else if (axis == "y") {
    rows = d.nz;
    cols = d.nx;
  } else {
    rows = d.ny;
    cols = d.nx;
  }
  std::vector<std::uint8_t> px(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = std::clamp(voxel(r, c), 0.0, 1.0);
      px[r * cols + c] = static_cast<std::uint8_t>(std::lround(255.0 * v));
    }
  }
  return {200, "image/png", encode_png_gray8(px, cols, rows)};
}

Reply AnnotationService::post_comparison(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return error_reply(400, "request body is not valid JSON");
  }
  if (!j.is_object()) return error_reply(400, "request body must be a JSON object");
  for (const char* key : {"pair_token", "outcome", "annotator"}) {
    if (!j.contains(key) || !j[key].is_string()) {
      return error_reply(400, std::string("field '") + key + "' must be a string");
    }
  }
  const auto token = j["pair_token"].get<std::string>();
  const auto outcome = j["outcome"].get<std::string>();
  const auto annotator = j["annotator"].get<std::string>();
  if (outcome != "left_worse" && outcome != "right_worse" && outcome != "similar") {
    return error_reply(400, "outcome must be left_worse, right_worse or similar");
  }
  if (annotator.empty()) return error_reply(400, "annotator must be non-empty");

  std::lock_guard lock(mu_);
  if (!pending_ || pending_->token != token) {
    return error_reply(409, "pair token is unknown or already answered");
  }
  const auto [i, k] = order_[pending_->pair];
  ComparisonRecord rec;
  rec.item_a = items_[pending_->left_is_first ? i : k].id;
  rec.item_b = items_[pending_->left_is_first ? k : i].id;
  rec.outcomes = {outcome == "left_worse"    ? Outcome::kAWorse
                  : outcome == "right_worse" ? Outcome::kBWorse
                                             : Outcome::kSimilar};
  rec.annotator = annotator;
  rec.timestamp = utc_timestamp();
  {
    std::ofstream log(log_path_, std::ios::app);
    log << comparison_to_json(rec) << '\n';
    log.flush();
    if (!log) return error_reply(500, "could not append to the comparisons log");
  }
  answered_[pending_->pair] = true;
  pending_.reset();
  return json_reply(201, {{"n_done", n_done_locked()}, {"n_total", order_.size()}});
}

Reply AnnotationService::pmas() {
  std::vector<ComparisonRecord> records;
  {
    std::lock_guard lock(mu_);
    records = records_locked();
  }
  nlohmann::json j;
  j["scores"] = nlohmann::json::object();
  j["n_comparisons"] = records.size();
  if (!records.empty()) {
    const PmasScores s = fit_bt(records, bt_);
    for (const auto& [id, b] : s.beta) j["scores"][id] = b;
    j["converged"] = s.converged;
  }
  return json_reply(200, j);
}

void AnnotationService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get("/api/pairs/next",
             [this, send](const httplib::Request&, httplib::Response& res) { send(res, next_pair()); });
  server.Get(R"(/api/slices/([^/]+)/([^/]+)/([^/]+)\.png)",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, slice(req.matches[1], req.matches[2], req.matches[3]));
             });
  server.Post("/api/comparisons", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, post_comparison(req.body));
  });
  server.Get("/api/pmas",
             [this, send](const httplib::Request&, httplib::Response& res) { send(res, pmas()); });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(nlohmann::json{{"error", "no such endpoint"}}.dump(), "application/json");
    }
  });
  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string msg = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          msg = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(nlohmann::json{{"error", msg}}.dump(), "application/json");
      });
}

void AnnotationService::serve(const std::string& host, int port) {
  httplib::Server server;
  mount(server);
  if (!server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
  }
  server.listen_after_bind();
}

}  // namespace momoc::service
