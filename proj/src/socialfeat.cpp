#include "popnet/socialfeat.hpp"

#include <algorithm>
#include <chrono>

#include "popnet/error.hpp"

namespace popnet {

std::vector<double> SocialFeatures::flatten() const {
  std::vector<double> v;
  v.reserve(kSocialDim);
  v.insert(v.end(), user.begin(), user.end());
  v.insert(v.end(), post.begin(), post.end());
  v.insert(v.end(), day_onehot.begin(), day_onehot.end());
  v.insert(v.end(), month_onehot.begin(), month_onehot.end());
  v.insert(v.end(), segment_onehot.begin(), segment_onehot.end());
  v.push_back(duration_days);
  return v;
}

std::int64_t UserRankTable::rank(const std::string& user_id) const {
  auto it = ranks_.find(user_id);
  if (it == ranks_.end()) throw Error(ErrorCode::kUnknownUser, "user '" + user_id + "' has no rank");
  return it->second;
}

UserRankTable build_user_ranks(const std::vector<PostRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot rank users of an empty record list");
  std::map<std::string, std::pair<double, std::int64_t>> sums;
  for (const auto& r : records) {
    auto& s = sums[r.user_id_raw];
    s.first += r.avg_views;
    s.second += 1;
  }
  std::vector<std::pair<double, std::string>> order;
  order.reserve(sums.size());
  for (const auto& [id, s] : sums) order.emplace_back(s.first / static_cast<double>(s.second), id);
  std::sort(order.begin(), order.end());
  std::map<std::string, std::int64_t> ranks;
  for (std::size_t i = 0; i < order.size(); ++i) ranks[order[i].second] = static_cast<std::int64_t>(i + 1);
  return UserRankTable(std::move(ranks));
}

TimeEncoding encode_time(std::int64_t post_date, std::int64_t reference_date) {
  using namespace std::chrono;
  if (post_date > reference_date) {
    throw Error(ErrorCode::kBadTimestamp, "post_date is after reference_date");
  }
  const sys_seconds t{seconds{post_date}};
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const weekday wd{day};
  const auto since_midnight = duration_cast<seconds>(t - day).count();

  TimeEncoding enc;
  enc.day_index = static_cast<int>(wd.iso_encoding()) - 1;  // Monday = 0
  enc.month_index = static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
  enc.segment_index = static_cast<int>(since_midnight / (6 * 3600));
  enc.day_onehot[static_cast<std::size_t>(enc.day_index)] = 1.0;
  enc.month_onehot[static_cast<std::size_t>(enc.month_index)] = 1.0;
  enc.segment_onehot[static_cast<std::size_t>(enc.segment_index)] = 1.0;
  enc.duration_days = static_cast<double>(online_days(post_date, reference_date));
  return enc;
}

SocialFeatures extract_social(const PostRecord& record, const UserRankTable& ranks) {
  SocialFeatures f;
  f.user = {static_cast<double>(ranks.rank(record.user_id_raw)), record.avg_views,
            static_cast<double>(record.group_count), record.member_count,
            static_cast<double>(record.image_count)};
  f.post = {static_cast<double>(record.tag_count), static_cast<double>(record.title_len),
            static_cast<double>(record.desc_len), record.has_people ? 1.0 : 0.0,
            static_cast<double>(record.comment_count)};
  const auto t = encode_time(record.post_date, record.reference_date);
  f.day_onehot = t.day_onehot;
  f.month_onehot = t.month_onehot;
  f.segment_onehot = t.segment_onehot;
  f.duration_days = t.duration_days;
  return f;
}

}  // namespace popnet
