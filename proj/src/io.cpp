#include "sagif/io.hpp"

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <tuple>

#include "sagif/errors.hpp"

namespace sagif {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void append_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  buf[0] = static_cast<char>(v & 0xff);
  buf[1] = static_cast<char>((v >> 8) & 0xff);
  buf[2] = static_cast<char>((v >> 16) & 0xff);
  buf[3] = static_cast<char>((v >> 24) & 0xff);
  out.append(buf, 4);
}

void append_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.append(buf, 8);
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  explicit Reader(const std::string& d) : data(d) {}

  std::uint32_t u32() {
    if (pos + 4 > data.size()) throw ValidationError("truncated binary file");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(data[pos + i]);
    pos += 4;
    return v;
  }

  double f64() {
    if (pos + 8 > data.size()) throw ValidationError("truncated binary file");
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(data[pos + i]);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::string bytes(std::size_t n) {
    if (pos + n > data.size()) throw ValidationError("truncated binary file");
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw IoError("double formatting failed");
  return std::string(buf, ptr);
}

void atomic_write(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

GraphBundle load_bundle(const fs::path& dir) {
  json manifest = parse_json_file(dir / "manifest.json");
  GraphBundle g;
  g.n = manifest.at("n").get<int>();
  g.m = manifest.at("m").get<int>();
  int d = manifest.at("d").get<int>();
  g.num_classes = manifest.at("classes").get<int>();

  {
    std::istringstream in(read_file(dir / "edges.tsv"));
    std::vector<std::tuple<int, int, double>> triplets;
    std::string line;
    int count = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      int a, b;
      if (!(ls >> a >> b)) throw ValidationError("edges.tsv: malformed line: " + line);
      if (a == b) throw ValidationError("edges.tsv: self-loop on node " + std::to_string(a));
      triplets.emplace_back(a, b, 1.0);
      triplets.emplace_back(b, a, 1.0);
      ++count;
    }
    if (count != g.m) throw ValidationError("edges.tsv: edge count disagrees with manifest");
    g.adjacency = SparseMatrix::from_triplets(g.n, g.n, std::move(triplets));
    for (double v : g.adjacency.values)
      if (v != 1.0) throw ValidationError("edges.tsv: duplicate edge");
  }

  {
    std::istringstream in(read_file(dir / "features.csv"));
    g.features = DenseMatrix(g.n, d);
    std::string line;
    for (int i = 0; i < g.n; ++i) {
      if (!std::getline(in, line))
        throw ValidationError("features.csv: expected " + std::to_string(g.n) + " rows");
      std::istringstream ls(line);
      std::string cell;
      for (int j = 0; j < d; ++j) {
        if (!std::getline(ls, cell, ','))
          throw ValidationError("features.csv: short row " + std::to_string(i));
        g.features.at(i, j) = std::stod(cell);
      }
    }
  }

  {
    std::istringstream in(read_file(dir / "labels.txt"));
    g.labels.resize(g.n);
    for (int i = 0; i < g.n; ++i)
      if (!(in >> g.labels[i])) throw ValidationError("labels.txt: expected one label per node");
  }

  json splits = parse_json_file(dir / "splits.json");
  g.train_idx = splits.at("train").get<std::vector<int>>();
  g.val_idx = splits.at("val").get<std::vector<int>>();
  g.test_idx = splits.at("test").get<std::vector<int>>();

  g.validate();
  return g;
}

void save_bundle(const fs::path& dir, const GraphBundle& g) {
  g.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());

  json manifest = {{"n", g.n}, {"m", g.m}, {"d", g.features.cols}, {"classes", g.num_classes}};
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");

  std::string edges;
  for (int i = 0; i < g.n; ++i)
    for (int j = g.adjacency.offsets[i]; j < g.adjacency.offsets[i + 1]; ++j)
      if (g.adjacency.indices[j] > i)
        edges += std::to_string(i) + "\t" + std::to_string(g.adjacency.indices[j]) + "\n";
  atomic_write(dir / "edges.tsv", edges);

  std::string features;
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.features.cols; ++j) {
      if (j > 0) features += ',';
      features += format_double(g.features.at(i, j));
    }
    features += '\n';
  }
  atomic_write(dir / "features.csv", features);

  std::string labels;
  for (int y : g.labels) labels += std::to_string(y) + "\n";
  atomic_write(dir / "labels.txt", labels);

  json splits = {{"train", g.train_idx}, {"val", g.val_idx}, {"test", g.test_idx}};
  atomic_write(dir / "splits.json", splits.dump() + "\n");
}

void save_oracle(const fs::path& path, const OracleSimilarity& sim) {
  std::string out = "ORCS";
  append_u32(out, static_cast<std::uint32_t>(sim.n));
  append_u32(out, static_cast<std::uint32_t>(sim.k));
  for (int i = 0; i < sim.n; ++i)
    for (int j = 0; j < sim.k; ++j) {
      append_u32(out, static_cast<std::uint32_t>(sim.neighbor(i, j)));
      append_f64(out, sim.score(i, j));
    }
  atomic_write(path, out);
}

OracleSimilarity load_oracle(const fs::path& path) {
  std::string data = read_file(path);
  Reader r(data);
  if (r.bytes(4) != "ORCS") throw ValidationError("bad magic in " + path.string());
  OracleSimilarity sim;
  sim.n = static_cast<int>(r.u32());
  sim.k = static_cast<int>(r.u32());
  sim.neighbors.resize(static_cast<std::size_t>(sim.n) * sim.k);
  sim.scores.resize(static_cast<std::size_t>(sim.n) * sim.k);
  for (std::size_t i = 0; i < sim.neighbors.size(); ++i) {
    sim.neighbors[i] = static_cast<int>(r.u32());
    sim.scores[i] = r.f64();
  }
  sim.check_invariants();
  return sim;
}

void save_encoding(const fs::path& path, const SimilarityEncoding& enc) {
  std::string out = "SENC";
  out += static_cast<char>(enc.method);
  append_u32(out, static_cast<std::uint32_t>(enc.p0.rows));
  append_u32(out, static_cast<std::uint32_t>(enc.p0.cols));
  for (double v : enc.p0.data) append_f64(out, v);
  atomic_write(path, out);
}

SimilarityEncoding load_encoding(const fs::path& path) {
  std::string data = read_file(path);
  Reader r(data);
  if (r.bytes(4) != "SENC") throw ValidationError("bad magic in " + path.string());
  SimilarityEncoding enc;
  enc.method = static_cast<EncodingMethod>(r.bytes(1)[0]);
  int n = static_cast<int>(r.u32());
  int d = static_cast<int>(r.u32());
  enc.p0 = DenseMatrix(n, d);
  for (double& v : enc.p0.data) v = r.f64();
  return enc;
}

void save_checkpoint(const fs::path& path, const ModelParams& params) {
  std::string out = "SGIF";
  std::string desc = arch_to_string(params.desc.arch);
  append_u32(out, static_cast<std::uint32_t>(desc.size()));
  out += desc;
  append_u32(out, static_cast<std::uint32_t>(params.desc.in_dim));
  append_u32(out, static_cast<std::uint32_t>(params.desc.hidden));
  append_u32(out, static_cast<std::uint32_t>(params.desc.d_sim));
  append_u32(out, static_cast<std::uint32_t>(params.desc.classes));
  for (const auto& [name, w] : params.params) {
    append_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    append_u32(out, static_cast<std::uint32_t>(w.rows));
    append_u32(out, static_cast<std::uint32_t>(w.cols));
    for (double v : w.data) append_f64(out, v);
  }
  atomic_write(path, out);
}

ModelParams load_checkpoint(const fs::path& path) {
  std::string data = read_file(path);
  Reader r(data);
  if (r.bytes(4) != "SGIF") throw ValidationError("bad magic in " + path.string());
  ModelParams params;
  params.desc.arch = arch_from_string(r.bytes(r.u32()));
  params.desc.in_dim = static_cast<int>(r.u32());
  params.desc.hidden = static_cast<int>(r.u32());
  params.desc.d_sim = static_cast<int>(r.u32());
  params.desc.classes = static_cast<int>(r.u32());
  while (r.pos < data.size()) {
    std::string name = r.bytes(r.u32());
    int rows = static_cast<int>(r.u32());
    int cols = static_cast<int>(r.u32());
    DenseMatrix w(rows, cols);
    for (double& v : w.data) v = r.f64();
    params.params.emplace_back(std::move(name), std::move(w));
  }
  return params;
}

std::string metrics_report_to_json(const MetricsReport& report) {
  json groups = json::array();
  for (const auto& row : report.groups)
    groups.push_back(
        {{"consistency", row.consistency}, {"count", row.count}, {"ndcg_at_k", row.mean_ndcg}});
  json j = {{"k", report.k},
            {"auc", report.auc},
            {"ndcg_at_k", report.ndcg_at_k},
            {"err_at_k", report.err_at_k},
            {"accuracy", report.accuracy},
            {"groups", groups}};
  return j.dump(2) + "\n";
}

std::string groups_to_csv(const MetricsReport& report) {
  std::string out = "consistency,count,ndcg_at_k\n";
  for (const auto& row : report.groups)
    out += format_double(row.consistency) + "," + std::to_string(row.count) + "," +
           format_double(row.mean_ndcg) + "\n";
  return out;
}

}  // namespace sagif
