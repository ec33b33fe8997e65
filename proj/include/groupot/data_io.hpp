#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "groupot/core.hpp"

namespace groupot {

/// Source-side samples; rows sorted by label, labels dense in 1..L.
struct LabeledSamples {
  Eigen::MatrixXd features;  // m x d
  std::vector<int> labels;   // length m, ascending
  Eigen::VectorXd weights;   // optional, empty unless the CSV provided one
};

struct UnlabeledSamples {
  Eigen::MatrixXd features;  // n x d
  Eigen::VectorXd weights;   // optional
};

/// Deterministic random source, pinned so runs reproduce across builds:
/// mt19937_64 for the bit stream, uniforms as (x >> 11) * 2^-53, normals via
/// the Box-Muller transform (two uniforms per pair, the second value cached).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  /// Uniform index in [0, bound); used by the Fisher-Yates shuffle.
  std::uint64_t index(std::uint64_t bound) { return engine_() % bound; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Gaussian class clusters in the plane: class l is centered at (5l, -5) on
/// the labeled side and (5l, +5) on the unlabeled side, unit variance, with
/// the unlabeled rows shuffled. Labeled rows come out sorted by label.
inline std::pair<LabeledSamples, UnlabeledSamples> gen_synthetic(
    int num_classes, int per_class, std::uint64_t seed) {
  if (num_classes < 1 || per_class < 1)
    throw Error("gen_synthetic requires positive class count and size");
  const int m = num_classes * per_class;
  Rng rng(seed);
  LabeledSamples src;
  src.features.resize(m, 2);
  src.labels.resize(static_cast<std::size_t>(m));
  int row = 0;
  for (int l = 1; l <= num_classes; ++l) {
    for (int k = 0; k < per_class; ++k, ++row) {
      src.features(row, 0) = 5.0 * l + rng.normal();
      src.features(row, 1) = -5.0 + rng.normal();
      src.labels[static_cast<std::size_t>(row)] = l;
    }
  }
  UnlabeledSamples tgt;
  tgt.features.resize(m, 2);
  row = 0;
  for (int l = 1; l <= num_classes; ++l) {
    for (int k = 0; k < per_class; ++k, ++row) {
      tgt.features(row, 0) = 5.0 * l + rng.normal();
      tgt.features(row, 1) = 5.0 + rng.normal();
    }
  }
  for (int i = m - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.index(static_cast<std::uint64_t>(i) + 1));
    tgt.features.row(i).swap(tgt.features.row(j));
  }
  return {std::move(src), std::move(tgt)};
}

/// Squared Euclidean distances between every labeled/unlabeled row pair.
inline Eigen::MatrixXd cost_matrix(const LabeledSamples& src,
                                   const UnlabeledSamples& tgt) {
  if (src.features.cols() != tgt.features.cols())
    throw DimensionMismatch("source has " +
                            std::to_string(src.features.cols()) +
                            " feature columns, target has " +
                            std::to_string(tgt.features.cols()));
  const Eigen::Index m = src.features.rows();
  const Eigen::Index n = tgt.features.rows();
  const Eigen::Index d = src.features.cols();
  Eigen::MatrixXd c(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double diff = src.features(i, k) - tgt.features(j, k);
        acc += diff * diff;
      }
      c(i, j) = acc;
    }
  }
  return c;
}

/// Builds the contiguous partition from sorted labels; labels must be dense
/// in 1..L with every class present.
inline GroupPartition partition_from_labels(const std::vector<int>& labels) {
  if (labels.empty()) throw PartitionMismatch("no labels");
  std::vector<int> sizes;
  int current = labels.front();
  if (current != 1)
    throw PartitionMismatch("labels must start at 1, got " +
                            std::to_string(current));
  int count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l == current) {
      ++count;
    } else if (l == current + 1) {
      sizes.push_back(count);
      current = l;
      count = 1;
    } else {
      throw PartitionMismatch("labels not sorted/dense near index " +
                              std::to_string(i) + " (label " +
                              std::to_string(l) + " after " +
                              std::to_string(current) + ")");
    }
  }
  sizes.push_back(count);
  return GroupPartition(sizes);
}

/// Assembles a ProblemInstance with uniform marginals (or the samples'
/// weights when requested). normalize_cost divides the cost matrix by its
/// maximum entry.
inline ProblemInstance make_instance(const LabeledSamples& src,
                                     const UnlabeledSamples& tgt,
                                     bool normalize_cost = false,
                                     bool use_weights = false) {
  Eigen::MatrixXd c = cost_matrix(src, tgt);
  if (normalize_cost) {
    const double cmax = c.maxCoeff();
    if (cmax > 0.0) c /= cmax;
  }
  const Eigen::Index m = c.rows();
  const Eigen::Index n = c.cols();
  Eigen::VectorXd a, b;
  if (use_weights && src.weights.size() == m)
    a = src.weights / src.weights.sum();
  else
    a = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  if (use_weights && tgt.weights.size() == n)
    b = tgt.weights / tgt.weights.sum();
  else
    b = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  ProblemInstance inst{std::move(c), std::move(a), std::move(b),
                       partition_from_labels(src.labels)};
  validate_instance(inst);
  return inst;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

inline double parse_double(const std::string& tok, long line, long column) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ParseError(line, column, "'" + tok + "' is not a number");
  return v;
}

inline long parse_label(const std::string& tok, long line) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0' || v < 1)
    throw ParseError(line, 0, "'" + tok + "' is not a positive label");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // tokenized, header width
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  CsvTable t;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto toks = split_csv_line(line);
    if (line_no == 1) {
      t.header = std::move(toks);
      continue;
    }
    if (toks.size() != t.header.size())
      throw InconsistentDimension(
          line_no, "row has " + std::to_string(toks.size()) +
                       " fields, header has " +
                       std::to_string(t.header.size()));
    t.rows.push_back(std::move(toks));
  }
  if (t.header.empty()) throw ParseError(1, 0, "empty file " + path);
  return t;
}

inline void expect_feature_names(const std::vector<std::string>& header,
                                 std::size_t first, const std::string& path) {
  for (std::size_t i = first; i < header.size(); ++i) {
    const std::string want = "f" + std::to_string(i - first);
    if (header[i] != want)
      throw ParseError(1, static_cast<long>(i),
                       path + ": expected column '" + want + "', got '" +
                           header[i] + "'");
  }
}

}  // namespace detail

/// Reads the two-file CSV format. The source header is
/// label[,weight],f0,f1,...; the target header is [weight,]f0,f1,....
/// Source rows are stably sorted by label after reading.
inline std::pair<LabeledSamples, UnlabeledSamples> load_csv(
    const std::string& source_path, const std::string& target_path) {
  using detail::CsvTable;
  const CsvTable st = detail::read_csv(source_path);
  if (st.header.empty() || st.header[0] != "label")
    throw MissingLabelColumn(source_path);
  const bool src_weighted = st.header.size() > 1 && st.header[1] == "weight";
  const std::size_t src_first_feature = src_weighted ? 2 : 1;
  if (st.header.size() <= src_first_feature)
    throw ParseError(1, static_cast<long>(st.header.size()),
                     source_path + ": no feature columns");
  detail::expect_feature_names(st.header, src_first_feature, source_path);
  const Eigen::Index d =
      static_cast<Eigen::Index>(st.header.size() - src_first_feature);

  struct SourceRow {
    int label;
    double weight;
    std::vector<double> feat;
  };
  std::vector<SourceRow> rows;
  rows.reserve(st.rows.size());
  for (std::size_t r = 0; r < st.rows.size(); ++r) {
    const long line = static_cast<long>(r) + 2;
    SourceRow row;
    row.label = static_cast<int>(detail::parse_label(st.rows[r][0], line));
    row.weight = src_weighted
                     ? detail::parse_double(st.rows[r][1], line, 1)
                     : 1.0;
    row.feat.resize(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k)
      row.feat[static_cast<std::size_t>(k)] = detail::parse_double(
          st.rows[r][src_first_feature + static_cast<std::size_t>(k)], line,
          static_cast<long>(src_first_feature) + k);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(2, 0, source_path + ": no data rows");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SourceRow& x, const SourceRow& y) {
                     return x.label < y.label;
                   });

  LabeledSamples src;
  src.features.resize(static_cast<Eigen::Index>(rows.size()), d);
  src.labels.resize(rows.size());
  if (src_weighted) src.weights.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    src.labels[r] = rows[r].label;
    if (src_weighted) src.weights[static_cast<Eigen::Index>(r)] = rows[r].weight;
    for (Eigen::Index k = 0; k < d; ++k)
      src.features(static_cast<Eigen::Index>(r), k) =
          rows[r].feat[static_cast<std::size_t>(k)];
  }

  const CsvTable tt = detail::read_csv(target_path);
  const bool tgt_weighted = !tt.header.empty() && tt.header[0] == "weight";
  const std::size_t tgt_first_feature = tgt_weighted ? 1 : 0;
  detail::expect_feature_names(tt.header, tgt_first_feature, target_path);
  const Eigen::Index td =
      static_cast<Eigen::Index>(tt.header.size() - tgt_first_feature);
  if (td != d)
    throw InconsistentDimension(
        1, target_path + " has " + std::to_string(td) +
               " features, source has " + std::to_string(d));
  if (tt.rows.empty()) throw ParseError(2, 0, target_path + ": no data rows");

  UnlabeledSamples tgt;
  tgt.features.resize(static_cast<Eigen::Index>(tt.rows.size()), d);
  if (tgt_weighted)
    tgt.weights.resize(static_cast<Eigen::Index>(tt.rows.size()));
  for (std::size_t r = 0; r < tt.rows.size(); ++r) {
    const long line = static_cast<long>(r) + 2;
    if (tgt_weighted)
      tgt.weights[static_cast<Eigen::Index>(r)] =
          detail::parse_double(tt.rows[r][0], line, 0);
    for (Eigen::Index k = 0; k < d; ++k)
      tgt.features(static_cast<Eigen::Index>(r), k) = detail::parse_double(
          tt.rows[r][tgt_first_feature + static_cast<std::size_t>(k)], line,
          static_cast<long>(tgt_first_feature) + k);
  }
  return {std::move(src), std::move(tgt)};
}

inline void save_source_csv(const LabeledSamples& src,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "label";
  for (Eigen::Index k = 0; k < src.features.cols(); ++k) out << ",f" << k;
  out << "\n";
  for (Eigen::Index i = 0; i < src.features.rows(); ++i) {
    out << src.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < src.features.cols(); ++k)
      out << ',' << detail::format_double(src.features(i, k));
    out << "\n";
  }
}

inline void save_target_csv(const UnlabeledSamples& tgt,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (Eigen::Index k = 0; k < tgt.features.cols(); ++k) {
    if (k > 0) out << ',';
    out << 'f' << k;
  }
  out << "\n";
  for (Eigen::Index i = 0; i < tgt.features.rows(); ++i) {
    for (Eigen::Index k = 0; k < tgt.features.cols(); ++k) {
      if (k > 0) out << ',';
      out << detail::format_double(tgt.features(i, k));
    }
    out << "\n";
  }
}

/// Plain numeric CSV without header; used for emitted transport plans.
inline void save_matrix_csv(const Eigen::MatrixXd& mat,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    for (Eigen::Index j = 0; j < mat.cols(); ++j) {
      if (j > 0) out << ',';
      out << detail::format_double(mat(i, j));
    }
    out << "\n";
  }
}

}  // namespace groupot
