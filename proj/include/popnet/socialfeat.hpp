#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "popnet/dataset.hpp"

namespace popnet {

inline constexpr std::size_t kSocialDim = 34;

// Offsets into the 34-d social vector.
namespace social_layout {
inline constexpr std::size_t kUser = 0;      // rank, avg_views, groups, members, images
inline constexpr std::size_t kPost = 5;      // tags, title, desc, has_people, comments
inline constexpr std::size_t kHasPeople = 8;
inline constexpr std::size_t kDay = 10;      // 7, Monday first
inline constexpr std::size_t kMonth = 17;    // 12, January first
inline constexpr std::size_t kSegment = 29;  // night, morning, afternoon, evening
inline constexpr std::size_t kDuration = 33;
}  // namespace social_layout

struct SocialFeatures {
  std::array<double, 5> user{};
  std::array<double, 5> post{};
  std::array<double, 7> day_onehot{};
  std::array<double, 12> month_onehot{};
  std::array<double, 4> segment_onehot{};
  double duration_days = 0.0;

  std::vector<double> flatten() const;
};

/// user_id_raw -> rank in 1..U, ascending by mean average views.
class UserRankTable {
 public:
  UserRankTable() = default;
  explicit UserRankTable(std::map<std::string, std::int64_t> ranks) : ranks_(std::move(ranks)) {}

  std::int64_t rank(const std::string& user_id) const;  // throws UnknownUser
  bool contains(const std::string& user_id) const { return ranks_.contains(user_id); }
  std::size_t size() const { return ranks_.size(); }
  const std::map<std::string, std::int64_t>& entries() const { return ranks_; }

 private:
  std::map<std::string, std::int64_t> ranks_;
};

/// Ties on the average are broken by the lexicographically smaller id
/// receiving the lower rank.
UserRankTable build_user_ranks(const std::vector<PostRecord>& records);

struct TimeEncoding {
  std::array<double, 7> day_onehot{};
  std::array<double, 12> month_onehot{};
  std::array<double, 4> segment_onehot{};
  double duration_days = 0.0;
  int day_index = 0;
  int month_index = 0;
  int segment_index = 0;
};

/// UTC calendar fields of post_date. Segments: night [00:00, 06:00),
/// morning [06:00, 12:00), afternoon [12:00, 18:00), evening [18:00, 24:00).
TimeEncoding encode_time(std::int64_t post_date, std::int64_t reference_date);

SocialFeatures extract_social(const PostRecord& record, const UserRankTable& ranks);

}  // namespace popnet
