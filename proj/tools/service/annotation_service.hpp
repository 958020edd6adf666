#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "momoc/eval.hpp"
#include "momoc/pmas.hpp"

namespace httplib {
class Server;
}

namespace momoc::service {

struct Reply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Blinded pairwise-comparison backend. Items are identified to clients only
// by random opaque ids; pairs are a seeded round-robin over unordered item
// pairs, and comparisons are appended to a JSONL log by this object alone.
class AnnotationService {
 public:
  AnnotationService(std::vector<NamedVolume> items, std::filesystem::path log_path,
                    std::uint64_t seed, BtOptions bt = {});

  // Every .pmv and .nii file in `dir`; the file stem is the item id.
  static std::vector<NamedVolume> load_items(const std::filesystem::path& dir);

  Reply next_pair();
  Reply slice(const std::string& opaque, const std::string& axis, const std::string& index);
  Reply post_comparison(const std::string& body);
  Reply pmas();

  void mount(httplib::Server& server);
  // Blocks until the server stops. Throws kIo when the port cannot be bound.
  void serve(const std::string& host, int port);

  std::size_t n_total() const { return order_.size(); }

 private:
  struct Item {
    std::string id;
    std::string opaque;
    RealVolume normalized;
  };
  struct Pending {
    std::string token;
    std::size_t pair;
    bool left_is_first;
  };

  std::string random_hex();
  std::size_t n_done_locked() const;
  std::vector<ComparisonRecord> records_locked() const;

  std::vector<Item> items_;
  std::map<std::string, std::size_t> by_opaque_;
  std::vector<std::pair<std::size_t, std::size_t>> order_;
  std::vector<bool> answered_;
  std::optional<Pending> pending_;
  std::filesystem::path log_path_;
  BtOptions bt_;
  std::mt19937_64 rng_;
  mutable std::mutex mu_;
};

}  // namespace momoc::service
