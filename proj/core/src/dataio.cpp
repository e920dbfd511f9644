#include "gcond/dataio.hpp"

#include "gcond/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace gcond {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::missing_file, "missing file: " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string where(const fs::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line + 1);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view tok, const fs::path& file, std::size_t line) {
  tok = trim(tok);
  T value{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    fail(ErrorCode::parse, where(file, line) + ": cannot parse '" + std::string(tok) + "'");
  }
  return value;
}

std::vector<std::string_view> tokens(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  if (sep == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      if (j > i) out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = line.find(sep, pos);
    out.push_back(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

Matrix read_matrix(const fs::path& file, Index rows, Index cols) {
  const std::string text = read_file(file);
  const auto lines = split_lines(text);
  require(static_cast<Index>(lines.size()) == rows, ErrorCode::count_mismatch,
          file.filename().string() + ": expected " + std::to_string(rows) + " rows, found " +
              std::to_string(lines.size()));
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto toks = tokens(lines[i], ',');
    require(static_cast<Index>(toks.size()) == cols, ErrorCode::count_mismatch,
            where(file, i) + ": expected " + std::to_string(cols) + " values, found " +
                std::to_string(toks.size()));
    for (std::size_t j = 0; j < toks.size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = parse_number<double>(toks[j], file, i);
    }
  }
  return m;
}

std::string format_double(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 4);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::vector<int> read_labels(const fs::path& file, Index n) {
  const std::string text = read_file(file);
  const auto lines = split_lines(text);
  require(static_cast<Index>(lines.size()) == n, ErrorCode::count_mismatch,
          file.filename().string() + ": expected " + std::to_string(n) + " labels, found " +
              std::to_string(lines.size()));
  std::vector<int> labels;
  labels.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) labels.push_back(parse_number<int>(lines[i], file, i));
  return labels;
}

std::string format_labels(std::span<const int> labels) {
  std::string out;
  for (int y : labels) out += std::to_string(y) + '\n';
  return out;
}

json read_manifest(const fs::path& dir) {
  const fs::path file = dir / "manifest.json";
  const std::string text = read_file(file);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, "manifest.json: " + std::string(e.what()));
  }
}

template <typename T>
T field(const json& m, const char* key) {
  if (!m.contains(key)) fail(ErrorCode::parse, std::string("manifest.json: missing field '") + key + "'");
  try {
    return m.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::parse, std::string("manifest.json: field '") + key + "' has the wrong type");
  }
}

}  // namespace

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(ErrorCode::missing_file, "cannot write " + file.string());
  out << text;
}

// --- datasets -------------------------------------------------------------

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::missing_file, "dataset directory not found: " + dir.string());
  const json m = read_manifest(dir);
  Dataset ds;
  ds.name = m.value("name", dir.filename().string());
  const auto n = field<Index>(m, "n");
  const auto d = field<Index>(m, "d");
  const int classes = field<int>(m, "classes");
  const bool directed = m.value("directed", false);
  require(n >= 1 && d >= 1 && classes >= 1, ErrorCode::validation,
          "manifest.json: n, d and classes must be positive");
  require(!directed, ErrorCode::validation, "manifest.json: directed graphs are not supported");

  SparseGraph& g = ds.graph;
  g.num_classes = classes;

  // edges
  {
    const fs::path file = dir / "edges.tsv";
    const std::string text = read_file(file);
    const auto lines = split_lines(text);
    if (m.contains("edges")) {
      const auto expect = field<std::size_t>(m, "edges");
      require(lines.size() == expect, ErrorCode::count_mismatch,
              "edges.tsv: manifest lists " + std::to_string(expect) + " edges, file has " +
                  std::to_string(lines.size()));
    }
    std::vector<Index> r, c;
    std::vector<double> v;
    r.reserve(lines.size() * 2);
    c.reserve(lines.size() * 2);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto toks = tokens(lines[i], ' ');
      require(toks.size() == 2 || toks.size() == 3, ErrorCode::parse,
              where(file, i) + ": expected 'u<TAB>v'");
      const auto a = parse_number<Index>(toks[0], file, i);
      const auto b = parse_number<Index>(toks[1], file, i);
      require(a >= 0 && a < n && b >= 0 && b < n, ErrorCode::out_of_range,
              where(file, i) + ": endpoint outside [0, " + std::to_string(n) + ")");
      if (a == b) continue;
      r.push_back(a);
      c.push_back(b);
      r.push_back(b);
      c.push_back(a);
    }
    v.assign(r.size(), 1.0);
    g.adjacency = CsrMatrix::from_triplets(n, n, r, c, v);
    // Duplicate listings collapse to a single unit edge.
    std::fill(g.adjacency.values.begin(), g.adjacency.values.end(), 1.0);
  }

  g.features = read_matrix(dir / "features.csv", n, d);

  g.labels = read_labels(dir / "labels.txt", n);
  for (std::size_t i = 0; i < g.labels.size(); ++i) {
    require(g.labels[i] >= -1 && g.labels[i] < classes, ErrorCode::out_of_range,
            where(dir / "labels.txt", i) + ": label " + std::to_string(g.labels[i]) +
                " outside [-1, " + std::to_string(classes) + ")");
  }

  {
    const fs::path file = dir / "splits.txt";
    const std::string text = read_file(file);
    auto lines = split_lines(text);
    while (lines.size() < 3) lines.emplace_back();
    require(lines.size() == 3, ErrorCode::count_mismatch, "splits.txt: expected 3 lines");
    std::vector<Index>* lists[3] = {&g.train, &g.val, &g.test};
    const char* names[3] = {"train", "val", "test"};
    for (std::size_t s = 0; s < 3; ++s) {
      for (auto tok : tokens(lines[s], ' ')) {
        const auto idx = parse_number<Index>(tok, file, s);
        require(idx >= 0 && idx < n, ErrorCode::out_of_range,
                where(file, s) + ": index " + std::to_string(idx) + " outside [0, " +
                    std::to_string(n) + ")");
        lists[s]->push_back(idx);
      }
      if (m.contains(names[s])) {
        const auto expect = field<std::size_t>(m, names[s]);
        require(lists[s]->size() == expect, ErrorCode::count_mismatch,
                std::string("splits.txt: manifest lists ") + std::to_string(expect) + " " + names[s] +
                    " nodes, file has " + std::to_string(lists[s]->size()));
      }
    }
  }
  g.validate();
  return ds;
}

void save_dataset(const fs::path& dir, const SparseGraph& graph, const std::string& name) {
  graph.validate();
  fs::create_directories(dir);
  std::string edges;
  Index count = 0;
  const CsrMatrix& a = graph.adjacency;
  for (Index i = 0; i < a.rows; ++i) {
    for (Index k = a.row_ptr[static_cast<std::size_t>(i)]; k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      const Index j = a.col_idx[static_cast<std::size_t>(k)];
      if (j <= i) continue;
      edges += std::to_string(i) + '\t' + std::to_string(j) + '\n';
      ++count;
    }
  }
  json m;
  m["name"] = name;
  m["n"] = graph.num_nodes();
  m["d"] = graph.feature_dim();
  m["classes"] = graph.num_classes;
  m["directed"] = false;
  m["edges"] = count;
  m["train"] = graph.train.size();
  m["val"] = graph.val.size();
  m["test"] = graph.test.size();
  write_text(dir / "manifest.json", m.dump(2) + '\n');
  write_text(dir / "edges.tsv", edges);
  write_text(dir / "features.csv", format_matrix(graph.features));
  write_text(dir / "labels.txt", format_labels(graph.labels));
  std::string splits;
  for (const auto* list : {&graph.train, &graph.val, &graph.test}) {
    for (std::size_t i = 0; i < list->size(); ++i) {
      if (i > 0) splits += ' ';
      splits += std::to_string((*list)[i]);
    }
    splits += '\n';
  }
  write_text(dir / "splits.txt", splits);
}

// --- condensed artifacts ------------------------------------------------------

std::map<std::string, std::string> config_echo(const CondenseConfig& c) {
  std::map<std::string, std::string> e;
  e["ratio"] = format_double(c.ratio);
  e["nodes"] = std::to_string(c.nodes);
  e["outer"] = std::to_string(c.outer);
  e["inner"] = std::to_string(c.inner);
  e["tau1"] = std::to_string(c.tau1);
  e["tau2"] = std::to_string(c.tau2);
  e["tau_theta"] = std::to_string(c.tau_theta);
  e["lr_feat"] = format_double(c.lr_feat);
  e["lr_phi"] = format_double(c.lr_phi);
  e["lr_theta"] = format_double(c.lr_theta);
  e["batch_size"] = std::to_string(c.batch_size);
  e["fanout"] = std::to_string(c.fanout);
  e["arch"] = std::string(to_string(c.model.arch));
  e["layers"] = std::to_string(c.model.layers);
  e["hidden"] = std::to_string(c.model.hidden);
  e["k_prop"] = std::to_string(c.model.k_prop);
  e["phi_layers"] = std::to_string(c.phi_layers);
  e["phi_hidden"] = std::to_string(c.phi_hidden);
  e["delta"] = format_double(c.delta);
  e["seed"] = std::to_string(c.seed);
  e["schedule"] = c.schedule == Schedule::alternate ? "alternate" : "joint";
  e["execution"] = c.execution == Execution::serial ? "serial" : "parallel";
  return e;
}

void save_condensed(const fs::path& dir, const CondensedGraph& cond,
                    const std::map<std::string, std::string>& echo, std::uint64_t seed) {
  require(cond.adjacency.has_value(), ErrorCode::validation, "save_condensed: graph is not finalized");
  fs::create_directories(dir);
  json m;
  m["method"] = std::string(to_string(cond.variant));
  m["seed"] = seed;
  m["delta"] = format_double(cond.delta);
  m["nodes"] = cond.nodes();
  m["d"] = cond.features.cols();
  m["classes"] = cond.num_classes;
  json cfg = json::object();
  for (const auto& [k, v] : echo) cfg[k] = v;
  m["config"] = cfg;
  write_text(dir / "manifest.json", m.dump(2) + '\n');
  write_text(dir / "features.csv", format_matrix(cond.features));
  write_text(dir / "adjacency.csv", format_matrix(*cond.adjacency));
  write_text(dir / "labels.txt", format_labels(cond.labels));
}

CondensedGraph load_condensed(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::missing_file, "artifact directory not found: " + dir.string());
  const json m = read_manifest(dir);
  CondensedGraph cond;
  cond.variant = parse_variant(field<std::string>(m, "method"));
  const auto n = field<Index>(m, "nodes");
  const auto d = field<Index>(m, "d");
  cond.num_classes = field<int>(m, "classes");
  const std::string delta = field<std::string>(m, "delta");
  cond.delta = parse_number<double>(delta, dir / "manifest.json", 0);
  cond.features = read_matrix(dir / "features.csv", n, d);
  Matrix a = read_matrix(dir / "adjacency.csv", n, n);
  const double asym = n > 0 ? (a - a.transpose()).cwiseAbs().maxCoeff() : 0.0;
  require(asym <= 1e-12, ErrorCode::validation,
          "adjacency.csv: asymmetric by " + format_double(asym));
  cond.adjacency = std::move(a);
  cond.labels = read_labels(dir / "labels.txt", n);
  for (std::size_t i = 0; i < cond.labels.size(); ++i) {
    require(cond.labels[i] >= 0 && cond.labels[i] < cond.num_classes, ErrorCode::out_of_range,
            where(dir / "labels.txt", i) + ": label outside [0, " + std::to_string(cond.num_classes) + ")");
  }
  return cond;
}

// --- synthetic graphs ---------------------------------------------------------

SparseGraph gen_synthetic(const SyntheticSpec& s) {
  require(s.n >= 1 && s.classes >= 1 && s.d >= 1, ErrorCode::validation,
          "gen_synthetic: n, classes and d must be positive");
  require(0.0 <= s.p_out && s.p_out <= s.p_in && s.p_in <= 1.0, ErrorCode::validation,
          "gen_synthetic: need 0 <= p_out <= p_in <= 1");
  require(s.train_frac > 0.0 && s.val_frac >= 0.0 && s.train_frac + s.val_frac <= 1.0,
          ErrorCode::validation, "gen_synthetic: bad split fractions");
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SparseGraph g;
  g.num_classes = s.classes;
  g.labels.resize(static_cast<std::size_t>(s.n));
  for (Index i = 0; i < s.n; ++i) g.labels[static_cast<std::size_t>(i)] = static_cast<int>(i % s.classes);

  std::vector<Index> r, c;
  for (Index i = 0; i < s.n; ++i) {
    for (Index j = i + 1; j < s.n; ++j) {
      const bool same = g.labels[static_cast<std::size_t>(i)] == g.labels[static_cast<std::size_t>(j)];
      if (unif(rng) < (same ? s.p_in : s.p_out)) {
        r.push_back(i);
        c.push_back(j);
        r.push_back(j);
        c.push_back(i);
      }
    }
  }
  const std::vector<double> v(r.size(), 1.0);
  g.adjacency = CsrMatrix::from_triplets(s.n, s.n, r, c, v);

  g.features.resize(s.n, s.d);
  for (Index i = 0; i < s.n; ++i) {
    for (Index j = 0; j < s.d; ++j) g.features(i, j) = s.noise * gauss(rng);
    g.features(i, g.labels[static_cast<std::size_t>(i)] % s.d) += s.signal;
  }

  for (int k = 0; k < s.classes; ++k) {
    std::vector<Index> members;
    for (Index i = k; i < s.n; i += s.classes) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    const auto m = static_cast<double>(members.size());
    auto n_train = static_cast<std::size_t>(std::max(1.0, std::round(s.train_frac * m)));
    n_train = std::min(n_train, members.size());
    const auto n_val = std::min(static_cast<std::size_t>(std::round(s.val_frac * m)), members.size() - n_train);
    for (std::size_t i = 0; i < members.size(); ++i) {
      auto& list = i < n_train ? g.train : i < n_train + n_val ? g.val : g.test;
      list.push_back(members[i]);
    }
  }
  for (auto* list : {&g.train, &g.val, &g.test}) std::sort(list->begin(), list->end());
  g.validate();
  return g;
}

}  // namespace gcond
