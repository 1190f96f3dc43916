#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mgnm::data {

struct Interaction {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;
  std::optional<double> rating;
};

// One next-item training/eval instance: fixed-capacity history + target.
struct InteractionSequence {
  int user_index = -1;
  std::vector<int> item_indices;  // length m; positions >= valid_length hold padding
  int valid_length = 0;
  int target_item = -1;
};

struct SplitRatios {
  int train = 7;
  int validation = 1;
  int test = 2;
};

struct DatasetSplit {
  std::vector<InteractionSequence> train;
  std::vector<InteractionSequence> validation;
  std::vector<InteractionSequence> test;
  std::vector<std::string> user_ids;  // index -> external id
  std::vector<std::string> item_ids;  // index -> external id; padding_index == item_ids.size()
  int padding_index = 0;
  int capacity = 0;  // m
  // Full per-user item history (train+valid+test, targets included); used to
  // exclude seen items from negative sampling.
  std::vector<std::vector<int>> user_history;

  int num_users() const { return static_cast<int>(user_ids.size()); }
  int num_items() const { return static_cast<int>(item_ids.size()); }
};

enum class FileFormat { kCsv, kTsv };

// Parses `user_id,item_id,timestamp[,rating]` with a header row. Malformed
// rows raise with the offending line number.
std::vector<Interaction> load_interactions(const std::string& path, FileFormat format);

// Applies the rating filter (keep rating > min_rating; rating-less rows always
// kept), removes users with fewer than 2 surviving interactions, splits each
// user's chronological sequence by the given ratios, and pairs every target
// with its preceding history window of up to capacity_m items (most recent
// kept on overflow).
DatasetSplit filter_and_split(const std::vector<Interaction>& raw, double min_rating,
                              SplitRatios ratios, int capacity_m);

// Segment sizes (train, validation, test) for a user with n interactions.
void segment_sizes(int n, SplitRatios ratios, int& n_train, int& n_valid, int& n_test);

// Uniform sample without replacement from [0, vocab_size) \ exclude.
std::vector<int> sample_negatives(int vocab_size, int count, const std::vector<int>& exclude,
                                  std::uint64_t rng_seed);

struct SyntheticDataset {
  DatasetSplit split;
  std::vector<int> item_cluster;               // planted cluster per item
  std::vector<std::vector<int>> user_clusters; // assigned clusters per user
};

// Planted-interest corpus: items are partitioned into clusters, each user
// draws from their assigned clusters with probability 1-noise_rate and
// uniformly otherwise.
SyntheticDataset generate_synthetic(int num_users, int num_items, int interests_per_user,
                                    int seq_len, double noise_rate, std::uint64_t rng_seed,
                                    int num_clusters = 10);

// Directory layout: vocab.tsv + {train,valid,test}.bin. Records are
// little-endian u32: count, then (user, valid_len, m items, target).
void save_split(const DatasetSplit& split, const std::string& dir);
DatasetSplit load_split(const std::string& dir);

}  // namespace mgnm::data
