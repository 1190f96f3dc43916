#include "mgnm/dataio.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "mgnm/rng.hpp"

namespace fs = std::filesystem;

namespace mgnm::data {

namespace {

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void row_error(const std::string& path, int line, int column, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": column " +
                           std::to_string(column) + ": " + what);
}

void write_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error(path + ": truncated record");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_sequences(const std::vector<InteractionSequence>& seqs, int m,
                     const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_u32(f, static_cast<std::uint32_t>(seqs.size()));
  for (const InteractionSequence& s : seqs) {
    write_u32(f, static_cast<std::uint32_t>(s.user_index));
    write_u32(f, static_cast<std::uint32_t>(s.valid_length));
    for (int i = 0; i < m; ++i) write_u32(f, static_cast<std::uint32_t>(s.item_indices[i]));
    write_u32(f, static_cast<std::uint32_t>(s.target_item));
  }
}

std::vector<InteractionSequence> read_sequences(const std::string& path, int m) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  const std::uint32_t count = read_u32(f, path);
  std::vector<InteractionSequence> seqs(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    InteractionSequence& s = seqs[r];
    s.user_index = static_cast<int>(read_u32(f, path));
    s.valid_length = static_cast<int>(read_u32(f, path));
    s.item_indices.resize(m);
    for (int i = 0; i < m; ++i) s.item_indices[i] = static_cast<int>(read_u32(f, path));
    s.target_item = static_cast<int>(read_u32(f, path));
  }
  return seqs;
}

void rebuild_history(DatasetSplit& split) {
  split.user_history.assign(split.user_ids.size(), {});
  auto add = [&](const std::vector<InteractionSequence>& seqs) {
    for (const InteractionSequence& s : seqs) {
      auto& h = split.user_history[static_cast<std::size_t>(s.user_index)];
      for (int i = 0; i < s.valid_length; ++i) h.push_back(s.item_indices[i]);
      h.push_back(s.target_item);
    }
  };
  add(split.train);
  add(split.validation);
  add(split.test);
  for (auto& h : split.user_history) {
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
  }
}

}  // namespace

std::vector<Interaction> load_interactions(const std::string& path, FileFormat format) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  const char sep = format == FileFormat::kCsv ? ',' : '\t';
  std::vector<Interaction> out;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    if (!header_seen) {
      header_seen = true;  // first non-empty line is the header
      continue;
    }
    std::vector<std::string> fields = split_fields(line, sep);
    if (fields.size() != 3 && fields.size() != 4)
      row_error(path, lineno, static_cast<int>(fields.size()),
                "expected 3 or 4 fields, got " + std::to_string(fields.size()));
    Interaction it;
    it.user_id = fields[0];
    it.item_id = fields[1];
    if (it.user_id.empty()) row_error(path, lineno, 1, "empty user_id");
    if (it.item_id.empty()) row_error(path, lineno, 2, "empty item_id");
    try {
      std::size_t pos = 0;
      it.timestamp = std::stoll(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument("trailing chars");
    } catch (const std::exception&) {
      row_error(path, lineno, 3, "bad timestamp '" + fields[2] + "'");
    }
    if (it.timestamp < 0) row_error(path, lineno, 3, "negative timestamp");
    if (fields.size() == 4 && !fields[3].empty()) {
      try {
        std::size_t pos = 0;
        it.rating = std::stod(fields[3], &pos);
        if (pos != fields[3].size()) throw std::invalid_argument("trailing chars");
      } catch (const std::exception&) {
        row_error(path, lineno, 4, "bad rating '" + fields[3] + "'");
      }
    }
    out.push_back(std::move(it));
  }
  return out;
}

void segment_sizes(int n, SplitRatios ratios, int& n_train, int& n_valid, int& n_test) {
  if (ratios.train <= 0 || ratios.validation < 0 || ratios.test < 0)
    throw std::invalid_argument("segment_sizes: bad ratios");
  const int total = ratios.train + ratios.validation + ratios.test;
  n_test = n * ratios.test / total;
  n_valid = n * ratios.validation / total;
  n_train = n - n_valid - n_test;
}

DatasetSplit filter_and_split(const std::vector<Interaction>& raw, double min_rating,
                              SplitRatios ratios, int capacity_m) {
  if (capacity_m < 1) throw std::invalid_argument("filter_and_split: capacity_m < 1");

  // filter, keeping input order (stable tie-break for equal timestamps)
  struct Row {
    const Interaction* it;
    int input_order;
  };
  std::vector<Row> kept;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const Interaction& it = raw[i];
    if (it.rating.has_value() && *it.rating <= min_rating) continue;
    kept.push_back({&it, static_cast<int>(i)});
  }

  // group per user in order of first appearance
  std::unordered_map<std::string, std::vector<Row>> by_user;
  std::vector<std::string> user_order;
  for (const Row& r : kept) {
    auto [pos, inserted] = by_user.try_emplace(r.it->user_id);
    if (inserted) user_order.push_back(r.it->user_id);
    pos->second.push_back(r);
  }

  DatasetSplit split;
  split.capacity = capacity_m;

  std::unordered_map<std::string, int> item_index;
  auto item_of = [&](const std::string& id) {
    auto [pos, inserted] = item_index.try_emplace(id, static_cast<int>(split.item_ids.size()));
    if (inserted) split.item_ids.push_back(id);
    return pos->second;
  };

  for (const std::string& uid : user_order) {
    std::vector<Row>& rows = by_user[uid];
    if (rows.size() < 2) continue;  // user with a length-1 history is removed
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      if (a.it->timestamp != b.it->timestamp) return a.it->timestamp < b.it->timestamp;
      return a.input_order < b.input_order;
    });
    const int user = static_cast<int>(split.user_ids.size());
    split.user_ids.push_back(uid);

    std::vector<int> items;
    items.reserve(rows.size());
    for (const Row& r : rows) items.push_back(item_of(r.it->item_id));

    const int n = static_cast<int>(items.size());
    int n_tr = 0, n_va = 0, n_te = 0;
    segment_sizes(n, ratios, n_tr, n_va, n_te);

    // target at position p (p >= 1), history = up to capacity_m most recent
    // preceding items
    auto make_sequence = [&](int p) {
      InteractionSequence s;
      s.user_index = user;
      const int start = std::max(0, p - capacity_m);
      s.valid_length = p - start;
      s.item_indices.assign(static_cast<std::size_t>(capacity_m), -1);  // pad later
      for (int i = 0; i < s.valid_length; ++i) s.item_indices[i] = items[start + i];
      s.target_item = items[p];
      return s;
    };
    for (int p = 1; p < n; ++p) {
      InteractionSequence s = make_sequence(p);
      if (p < n_tr)
        split.train.push_back(std::move(s));
      else if (p < n_tr + n_va)
        split.validation.push_back(std::move(s));
      else
        split.test.push_back(std::move(s));
    }
  }

  if (split.user_ids.empty()) throw std::runtime_error("filter_and_split: no users survive filtering");

  split.padding_index = static_cast<int>(split.item_ids.size());
  auto fix_padding = [&](std::vector<InteractionSequence>& seqs) {
    for (InteractionSequence& s : seqs)
      for (int& x : s.item_indices)
        if (x < 0) x = split.padding_index;
  };
  fix_padding(split.train);
  fix_padding(split.validation);
  fix_padding(split.test);
  rebuild_history(split);
  return split;
}

std::vector<int> sample_negatives(int vocab_size, int count, const std::vector<int>& exclude,
                                  std::uint64_t rng_seed) {
  std::unordered_set<int> excluded(exclude.begin(), exclude.end());
  int available = 0;
  for (int i = 0; i < vocab_size; ++i)
    if (!excluded.count(i)) ++available;
  if (available < count)
    throw std::runtime_error("sample_negatives: vocabulary too small (" +
                             std::to_string(available) + " available, " + std::to_string(count) +
                             " requested)");
  std::mt19937_64 gen(rng_seed);
  std::uniform_int_distribution<int> dist(0, vocab_size - 1);
  std::unordered_set<int> taken;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    const int x = dist(gen);
    if (excluded.count(x) || taken.count(x)) continue;
    taken.insert(x);
    out.push_back(x);
  }
  return out;
}

SyntheticDataset generate_synthetic(int num_users, int num_items, int interests_per_user,
                                    int seq_len, double noise_rate, std::uint64_t rng_seed,
                                    int num_clusters) {
  if (interests_per_user < 1) throw std::invalid_argument("generate_synthetic: interests < 1");
  if (noise_rate < 0.0 || noise_rate >= 1.0)
    throw std::invalid_argument("generate_synthetic: noise_rate out of [0,1)");
  if (num_clusters > num_items)
    throw std::invalid_argument("generate_synthetic: more clusters than items");
  if (interests_per_user > num_clusters)
    throw std::invalid_argument("generate_synthetic: more interests than clusters");

  SyntheticDataset ds;
  ds.item_cluster.resize(static_cast<std::size_t>(num_items));
  std::vector<std::vector<int>> cluster_items(static_cast<std::size_t>(num_clusters));
  for (int i = 0; i < num_items; ++i) {
    const int c = static_cast<int>(static_cast<std::int64_t>(i) * num_clusters / num_items);
    ds.item_cluster[static_cast<std::size_t>(i)] = c;
    cluster_items[static_cast<std::size_t>(c)].push_back(i);
  }

  std::vector<Interaction> raw;
  raw.reserve(static_cast<std::size_t>(num_users) * seq_len);
  ds.user_clusters.resize(static_cast<std::size_t>(num_users));
  std::mt19937_64 gen(mix_seed(rng_seed, 0x5e9u));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int u = 0; u < num_users; ++u) {
    // assign distinct clusters
    std::vector<int> all(static_cast<std::size_t>(num_clusters));
    for (int c = 0; c < num_clusters; ++c) all[static_cast<std::size_t>(c)] = c;
    std::shuffle(all.begin(), all.end(), gen);
    all.resize(static_cast<std::size_t>(interests_per_user));
    std::sort(all.begin(), all.end());
    ds.user_clusters[static_cast<std::size_t>(u)] = all;

    for (int t = 0; t < seq_len; ++t) {
      int item;
      if (unif(gen) >= noise_rate) {
        const int c = all[static_cast<std::size_t>(
            std::uniform_int_distribution<int>(0, interests_per_user - 1)(gen))];
        const auto& pool = cluster_items[static_cast<std::size_t>(c)];
        item = pool[static_cast<std::size_t>(
            std::uniform_int_distribution<int>(0, static_cast<int>(pool.size()) - 1)(gen))];
      } else {
        item = std::uniform_int_distribution<int>(0, num_items - 1)(gen);
      }
      Interaction it;
      it.user_id = "u" + std::to_string(u);
      it.item_id = "i" + std::to_string(item);
      it.timestamp = t;
      raw.push_back(std::move(it));
    }
  }

  ds.split = filter_and_split(raw, 0.0, SplitRatios{}, seq_len);

  // remap planted clusters to the split's item indexing
  std::vector<int> remapped(ds.split.item_ids.size());
  for (std::size_t i = 0; i < ds.split.item_ids.size(); ++i) {
    const int orig = std::stoi(ds.split.item_ids[i].substr(1));
    remapped[i] = ds.item_cluster[static_cast<std::size_t>(orig)];
  }
  ds.item_cluster = std::move(remapped);
  return ds;
}

void save_split(const DatasetSplit& split, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream f(dir + "/vocab.tsv");
    if (!f) throw std::runtime_error("cannot open " + dir + "/vocab.tsv for writing");
    f << "#capacity\t" << split.capacity << "\n";
    f << "#padding_index\t" << split.padding_index << "\n";
    for (std::size_t i = 0; i < split.user_ids.size(); ++i)
      f << "user\t" << i << "\t" << split.user_ids[i] << "\n";
    for (std::size_t i = 0; i < split.item_ids.size(); ++i)
      f << "item\t" << i << "\t" << split.item_ids[i] << "\n";
  }
  write_sequences(split.train, split.capacity, dir + "/train.bin");
  write_sequences(split.validation, split.capacity, dir + "/valid.bin");
  write_sequences(split.test, split.capacity, dir + "/test.bin");
}

DatasetSplit load_split(const std::string& dir) {
  DatasetSplit split;
  std::ifstream f(dir + "/vocab.tsv");
  if (!f) throw std::runtime_error("cannot open " + dir + "/vocab.tsv");
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line, '\t');
    if (fields[0] == "#capacity")
      split.capacity = std::stoi(fields[1]);
    else if (fields[0] == "#padding_index")
      split.padding_index = std::stoi(fields[1]);
    else if (fields[0] == "user")
      split.user_ids.push_back(fields[2]);
    else if (fields[0] == "item")
      split.item_ids.push_back(fields[2]);
    else
      throw std::runtime_error(dir + "/vocab.tsv: unknown record '" + fields[0] + "'");
  }
  if (split.capacity < 1) throw std::runtime_error(dir + "/vocab.tsv: missing capacity");
  split.train = read_sequences(dir + "/train.bin", split.capacity);
  split.validation = read_sequences(dir + "/valid.bin", split.capacity);
  split.test = read_sequences(dir + "/test.bin", split.capacity);
  rebuild_history(split);
  return split;
}

}  // namespace mgnm::data
