#include "stylo/serialize.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "stylo/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "blob formats are little-endian; big-endian hosts are unsupported");

namespace stylo {

using ordered_json = nlohmann::ordered_json;

uint64_t fnv1a64(const void* data, size_t n) {
  const auto* bytes = static_cast<const uint8_t*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr int kSchemaVersion = 1;

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_file(const std::string& path, const void* data, size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw ConfigError("short write to " + path);
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw MissingArtifactError("missing file: " + path);
  const auto size = in.tellg();
  in.seekg(0);
  std::vector<uint8_t> data(static_cast<size_t>(size));
  in.read(reinterpret_cast<char*>(data.data()), size);
  if (!in) throw ConfigError("short read from " + path);
  return data;
}

ordered_json net_config_json(const NetConfig& cfg) {
  return ordered_json{{"input_dim", cfg.input_dim}, {"width", cfg.width},
                      {"blocks", cfg.blocks},       {"hidden", cfg.hidden},
                      {"actions", cfg.actions},     {"rank", cfg.rank},
                      {"modules", cfg.modules},     {"heads", cfg.heads}};
}

NetConfig net_config_from_json(const ordered_json& j) {
  NetConfig cfg;
  cfg.input_dim = j.at("input_dim");
  cfg.width = j.at("width");
  cfg.blocks = j.at("blocks");
  cfg.hidden = j.at("hidden");
  cfg.actions = j.at("actions");
  cfg.rank = j.at("rank");
  cfg.modules = j.at("modules");
  cfg.heads = j.at("heads");
  return cfg;
}

ordered_json load_manifest(const std::string& path, const std::string& kind) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("missing file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("malformed manifest " + path + ": " + e.what());
  }
  if (j.value("kind", "") != kind) {
    throw ConfigError(path + ": expected kind '" + kind + "', got '" + j.value("kind", "") + "'");
  }
  return j;
}

void verify_blob(const ordered_json& manifest, const std::vector<uint8_t>& blob,
                 const std::string& path) {
  const std::string expected = manifest.at("blob_hash");
  const std::string actual = "fnv1a64:" + hex64(fnv1a64(blob.data(), blob.size()));
  if (expected != actual) {
    throw ConfigError(path + ": blob hash mismatch (" + actual + " vs manifest " + expected + ")");
  }
}

}  // namespace

void save_checkpoint(const std::string& prefix, const TrainedModel& model,
                     const std::vector<int>* routing_player_ids) {
  std::vector<uint8_t> blob;
  ordered_json tensors = ordered_json::array();
  int routing_rows = 0;
  for (const auto& p : model.store.params()) {
    if (p.name.rfind("routing.row.", 0) == 0) ++routing_rows;
    ordered_json entry;
    entry["name"] = p.name;
    entry["shape"] = p.value.shape;
    entry["dtype"] = "f32";
    entry["offset"] = blob.size();
    tensors.push_back(entry);
    const auto* src = reinterpret_cast<const uint8_t*>(p.value.data.data());
    blob.insert(blob.end(), src, src + p.value.data.size() * sizeof(float));
  }
  if (routing_rows > 0) {
    if (!routing_player_ids || static_cast<int>(routing_player_ids->size()) != routing_rows) {
      throw ConfigError("save_checkpoint: routing rows present but player-id table does not match");
    }
  }
  ordered_json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["kind"] = "checkpoint";
  manifest["net"] = net_config_json(model.net_cfg);
  manifest["tensors"] = tensors;
  if (routing_player_ids) manifest["routing_player_ids"] = *routing_player_ids;
  manifest["blob_bytes"] = blob.size();
  manifest["blob_hash"] = "fnv1a64:" + hex64(fnv1a64(blob.data(), blob.size()));
  std::ofstream out(prefix + ".json");
  if (!out) throw ConfigError("cannot write " + prefix + ".json");
  out << manifest.dump(2) << "\n";
  write_file(prefix + ".bin", blob.data(), blob.size());
}

LoadedCheckpoint load_checkpoint(const std::string& prefix) {
  const ordered_json manifest = load_manifest(prefix + ".json", "checkpoint");
  const std::vector<uint8_t> blob = read_file(prefix + ".bin");
  verify_blob(manifest, blob, prefix + ".bin");

  LoadedCheckpoint loaded;
  loaded.model.net_cfg = net_config_from_json(manifest.at("net"));
  RngStream dummy(0);
  loaded.model.net = PolicyNet(loaded.model.net_cfg, loaded.model.store, dummy);

  const auto copy_tensor = [&](const ordered_json& entry, Tensor& dst) {
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    if (shape != dst.shape) {
      throw ConfigError("checkpoint tensor " + entry.at("name").get<std::string>() +
                        " has shape " + Tensor::shape_str(shape) + ", expected " +
                        Tensor::shape_str(dst.shape));
    }
    const size_t offset = entry.at("offset");
    const size_t bytes = dst.data.size() * sizeof(float);
    if (offset + bytes > blob.size()) throw ConfigError("checkpoint blob too short");
    std::memcpy(dst.data.data(), blob.data() + offset, bytes);
  };

  for (const auto& entry : manifest.at("tensors")) {
    const std::string name = entry.at("name");
    if (name.rfind("routing.row.", 0) == 0) {
      const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
      const int id = loaded.model.store.add(name, Tensor(shape), Group::Routing);
      copy_tensor(entry, loaded.model.store.at(id).value);
    } else {
      const int id = loaded.model.store.find(name);
      if (id < 0) throw ConfigError("checkpoint tensor " + name + " not part of the network");
      copy_tensor(entry, loaded.model.store.at(id).value);
    }
  }
  if (manifest.contains("routing_player_ids")) {
    const std::vector<int> ids = manifest.at("routing_player_ids").get<std::vector<int>>();
    loaded.routing.modules = loaded.model.net_cfg.modules;
    loaded.routing.heads = loaded.model.net_cfg.heads;
    for (size_t t = 0; t < ids.size(); ++t) {
      const int id = loaded.model.store.find("routing.row." + std::to_string(t));
      if (id < 0) throw ConfigError("checkpoint missing routing row " + std::to_string(t));
      StyleVector row;
      row.player_id = ids[t];
      row.logits = loaded.model.store.at(id).value;
      loaded.routing.rows.push_back(std::move(row));
    }
    loaded.has_routing = true;
  }
  return loaded;
}

const PlayerDataset& DataBundle::find(const std::vector<PlayerDataset>& set, int player_id) {
  for (const auto& ds : set) {
    if (ds.player_id == player_id) return ds;
  }
  throw MissingArtifactError("no dataset for player " + std::to_string(player_id));
}

namespace {

void append_dataset(const PlayerDataset& ds, const char* set_name, ordered_json& entries,
                    std::vector<uint8_t>& blob) {
  ordered_json entry;
  entry["id"] = ds.player_id;
  entry["set"] = set_name;
  entry["rows"] = ds.rows();
  entry["games"] = ds.n_games();
  entry["splits"] = {ds.train_games, ds.test_games, ds.val_games};
  entry["game_row_begin"] = ds.game_row_begin;
  entry["feat_offset"] = blob.size();
  const auto* fsrc = reinterpret_cast<const uint8_t*>(ds.features.data.data());
  blob.insert(blob.end(), fsrc, fsrc + ds.features.data.size() * sizeof(float));
  entry["act_offset"] = blob.size();
  blob.insert(blob.end(), ds.actions.begin(), ds.actions.end());
  entries.push_back(entry);
}

PlayerDataset read_dataset(const ordered_json& entry, const std::vector<uint8_t>& blob) {
  PlayerDataset ds;
  ds.player_id = entry.at("id");
  const int rows = entry.at("rows");
  ds.game_row_begin = entry.at("game_row_begin").get<std::vector<int>>();
  const auto splits = entry.at("splits").get<std::vector<int>>();
  ds.train_games = splits[0];
  ds.test_games = splits[1];
  ds.val_games = splits[2];
  const size_t feat_offset = entry.at("feat_offset");
  const size_t act_offset = entry.at("act_offset");
  ds.features = Tensor({rows, kFeatureDim});
  const size_t feat_bytes = ds.features.data.size() * sizeof(float);
  if (feat_offset + feat_bytes > blob.size() ||
      act_offset + static_cast<size_t>(rows) > blob.size()) {
    throw ConfigError("dataset blob too short");
  }
  std::memcpy(ds.features.data.data(), blob.data() + feat_offset, feat_bytes);
  ds.actions.assign(blob.begin() + static_cast<long>(act_offset),
                    blob.begin() + static_cast<long>(act_offset) + rows);
  return ds;
}

}  // namespace

void save_datasets(const std::string& prefix, const DataBundle& bundle) {
  std::vector<uint8_t> blob;
  ordered_json entries = ordered_json::array();
  for (const auto& ds : bundle.main) append_dataset(ds, "main", entries, blob);
  for (const auto& ds : bundle.reference) append_dataset(ds, "reference", entries, blob);
  for (const auto& ds : bundle.query) append_dataset(ds, "query", entries, blob);
  ordered_json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["kind"] = "datasets";
  manifest["feature_dim"] = kFeatureDim;
  manifest["entries"] = entries;
  manifest["blob_bytes"] = blob.size();
  manifest["blob_hash"] = "fnv1a64:" + hex64(fnv1a64(blob.data(), blob.size()));
  std::ofstream out(prefix + ".json");
  if (!out) throw ConfigError("cannot write " + prefix + ".json");
  out << manifest.dump(2) << "\n";
  write_file(prefix + ".bin", blob.data(), blob.size());
}

DataBundle load_datasets(const std::string& prefix) {
  const ordered_json manifest = load_manifest(prefix + ".json", "datasets");
  const std::vector<uint8_t> blob = read_file(prefix + ".bin");
  verify_blob(manifest, blob, prefix + ".bin");
  DataBundle bundle;
  for (const auto& entry : manifest.at("entries")) {
    const std::string set = entry.at("set");
    PlayerDataset ds = read_dataset(entry, blob);
    if (set == "main") bundle.main.push_back(std::move(ds));
    else if (set == "reference") bundle.reference.push_back(std::move(ds));
    else if (set == "query") bundle.query.push_back(std::move(ds));
    else throw ConfigError("datasets manifest: unknown set '" + set + "'");
  }
  return bundle;
}

void save_style_vectors(const std::string& prefix, const std::vector<StyleVector>& vectors) {
  if (vectors.empty()) throw ArgumentError("save_style_vectors: nothing to save");
  std::vector<uint8_t> blob;
  ordered_json players = ordered_json::array();
  for (const auto& v : vectors) {
    players.push_back(v.player_id);
    const auto* src = reinterpret_cast<const uint8_t*>(v.logits.data.data());
    blob.insert(blob.end(), src, src + v.logits.data.size() * sizeof(float));
  }
  ordered_json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["kind"] = "style_vectors";
  manifest["modules"] = vectors[0].logits.shape[0];
  manifest["heads"] = vectors[0].logits.shape[1];
  manifest["players"] = players;
  manifest["blob_bytes"] = blob.size();
  manifest["blob_hash"] = "fnv1a64:" + hex64(fnv1a64(blob.data(), blob.size()));
  std::ofstream out(prefix + ".json");
  if (!out) throw ConfigError("cannot write " + prefix + ".json");
  out << manifest.dump(2) << "\n";
  write_file(prefix + ".bin", blob.data(), blob.size());
}

std::vector<StyleVector> load_style_vectors(const std::string& prefix) {
  const ordered_json manifest = load_manifest(prefix + ".json", "style_vectors");
  const std::vector<uint8_t> blob = read_file(prefix + ".bin");
  verify_blob(manifest, blob, prefix + ".bin");
  const int m = manifest.at("modules"), h = manifest.at("heads");
  const std::vector<int> players = manifest.at("players").get<std::vector<int>>();
  std::vector<StyleVector> vectors;
  const size_t stride = static_cast<size_t>(m) * h * sizeof(float);
  for (size_t i = 0; i < players.size(); ++i) {
    StyleVector v;
    v.player_id = players[i];
    v.logits = Tensor({m, h});
    std::memcpy(v.logits.data.data(), blob.data() + i * stride, stride);
    vectors.push_back(std::move(v));
  }
  return vectors;
}

void write_trajectories(const std::string& path, const std::vector<MatchResult>& matches) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "game,ply,side,lx,ly,rx,ry,bx,by,action\n";
  for (size_t g = 0; g < matches.size(); ++g) {
    for (const PlyRecord& rec : matches[g].trajectory) {
      const GameState& s = rec.state;
      out << g << ',' << rec.ply << ',' << (rec.side == Side::L ? 'L' : 'R') << ','
          << int(s.ax[0]) << ',' << int(s.ay[0]) << ',' << int(s.ax[1]) << ',' << int(s.ay[1])
          << ',' << int(s.bx) << ',' << int(s.by) << ',' << static_cast<int>(rec.action) << '\n';
    }
  }
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

void require_artifact(const std::string& path, const std::string& produced_by) {
  if (!file_exists(path)) {
    throw MissingArtifactError("missing artifact " + path + " (run '" + produced_by + "' first)");
  }
}

}  // namespace stylo
