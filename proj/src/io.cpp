#include "dwd/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string_view>

#include "dwd/error.hpp"
#include "dwd/rng.hpp"

namespace dwd {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> to_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return value;
}

struct Line {
  std::size_t number;
  std::vector<std::string_view> fields;
};

std::vector<Line> split_lines(const std::string& text, char delimiter, bool by_whitespace) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++number;
    const std::string_view raw = trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    if (raw.empty() || raw.front() == '#') continue;
    Line line{number, {}};
    if (by_whitespace) {
      std::size_t pos = 0;
      while (pos < raw.size()) {
        const auto next = raw.find_first_of(" \t", pos);
        const auto token = raw.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
        if (!token.empty()) line.fields.push_back(token);
        if (next == std::string_view::npos) break;
        pos = next + 1;
      }
    } else {
      std::size_t pos = 0;
      while (true) {
        const auto next = raw.find(delimiter, pos);
        line.fields.push_back(trim(raw.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
      }
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

/// Ascending order of the two label strings.
std::vector<std::string> order_labels(const std::set<std::string>& labels) {
  std::vector<std::string> names(labels.begin(), labels.end());
  if (names.size() == 2) {
    const auto a = to_number(names[0]);
    const auto b = to_number(names[1]);
    if (a && b && *b < *a) std::swap(names[0], names[1]);
  }
  return names;
}

/// Maps label strings to -1/+1 and records the names on the dataset.
Dataset labelled_dataset(Eigen::MatrixXd x, const std::vector<std::string>& raw_labels) {
  const std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
  if (distinct.size() > 2) {
    std::string list;
    for (const auto& l : distinct) list += (list.empty() ? "" : ", ") + l;
    throw DataError("expected two classes, found " + std::to_string(distinct.size()) + " labels: " + list);
  }
  std::vector<std::string> names = order_labels(distinct);
  if (names.size() == 1) {
    // A single class: keep the conventional sign when the label says so.
    const auto v = to_number(names[0]);
    names = (v && *v <= 0.0) ? std::vector<std::string>{names[0], ""} : std::vector<std::string>{"", names[0]};
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(raw_labels.size()));
  for (std::size_t i = 0; i < raw_labels.size(); ++i) y[static_cast<Eigen::Index>(i)] = raw_labels[i] == names[1] ? 1.0 : -1.0;
  Dataset data(std::move(x), std::move(y));
  if (!names.empty()) data.set_label_names(std::move(names));
  return data;
}

bool looks_like_header(const Line& line, std::optional<std::size_t> label_col) {
  for (std::size_t j = 0; j < line.fields.size(); ++j) {
    if (label_col && j == *label_col) continue;
    if (!to_number(line.fields[j])) return true;
  }
  return false;
}

std::size_t resolve_label_column(int label_column, std::size_t columns, std::size_t line) {
  const long col = label_column < 0 ? static_cast<long>(columns) + label_column : label_column;
  if (col < 0 || col >= static_cast<long>(columns)) {
    throw ParseError("label column " + std::to_string(label_column) + " is out of range for " +
                         std::to_string(columns) + " columns",
                     line);
  }
  return static_cast<std::size_t>(col);
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ec == std::errc() ? end : buffer);
}

Dataset parse_csv(const std::string& text, const CsvOptions& options) {
  auto lines = split_lines(text, ',', false);
  if (lines.empty()) throw DataError("CSV input has no rows");
  const std::size_t columns = lines.front().fields.size();
  if (columns < 2) throw ParseError("CSV rows need a label and at least one feature", lines.front().number);
  const std::size_t label_col = resolve_label_column(options.label_column, columns, lines.front().number);

  std::size_t first = 0;
  if (options.header == HeaderMode::present ||
      (options.header == HeaderMode::detect && looks_like_header(lines.front(), label_col))) {
    first = 1;
  }
  const auto rows = static_cast<Eigen::Index>(lines.size() - first);
  if (rows == 0) throw DataError("CSV input has a header but no data rows");
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(columns - 1));
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(rows));
  for (std::size_t r = first; r < lines.size(); ++r) {
    const Line& line = lines[r];
    if (line.fields.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " fields, found " + std::to_string(line.fields.size()),
                       line.number);
    }
    const auto row = static_cast<Eigen::Index>(r - first);
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < columns; ++j) {
      if (j == label_col) {
        if (line.fields[j].empty()) throw ParseError("missing label", line.number);
        labels.emplace_back(line.fields[j]);
        continue;
      }
      if (line.fields[j].empty()) throw ParseError("missing value in column " + std::to_string(j + 1), line.number);
      const auto value = to_number(line.fields[j]);
      if (!value) {
        throw ParseError("non-numeric value '" + std::string(line.fields[j]) + "' in column " + std::to_string(j + 1),
                         line.number);
      }
      if (!std::isfinite(*value)) throw ParseError("non-finite value in column " + std::to_string(j + 1), line.number);
      x(row, col++) = *value;
    }
  }
  Dataset data = labelled_dataset(std::move(x), labels);
  if (options.standardize) {
    data = Standardizer::fit(data.x()).apply(data);
  }
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  return parse_csv(read_file(path), options);
}

Eigen::MatrixXd parse_feature_csv(const std::string& text, HeaderMode header) {
  auto lines = split_lines(text, ',', false);
  if (lines.empty()) return Eigen::MatrixXd(0, 0);
  std::size_t first = 0;
  if (header == HeaderMode::present || (header == HeaderMode::detect && looks_like_header(lines.front(), std::nullopt))) {
    first = 1;
  }
  const std::size_t columns = lines.front().fields.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(lines.size() - first), static_cast<Eigen::Index>(columns));
  for (std::size_t r = first; r < lines.size(); ++r) {
    const Line& line = lines[r];
    if (line.fields.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " fields, found " + std::to_string(line.fields.size()),
                       line.number);
    }
    for (std::size_t j = 0; j < columns; ++j) {
      const auto value = to_number(line.fields[j]);
      if (!value || !std::isfinite(*value)) {
        throw ParseError("bad value '" + std::string(line.fields[j]) + "' in column " + std::to_string(j + 1),
                         line.number);
      }
      x(static_cast<Eigen::Index>(r - first), static_cast<Eigen::Index>(j)) = *value;
    }
  }
  return x;
}

Eigen::MatrixXd load_feature_csv(const std::filesystem::path& path, HeaderMode header) {
  return parse_feature_csv(read_file(path), header);
}

Dataset parse_libsvm(const std::string& text, Eigen::Index features) {
  const auto lines = split_lines(text, ' ', true);
  if (lines.empty()) throw DataError("sparse input has no rows");
  std::vector<std::string> labels;
  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows;
  Eigen::Index max_index = 0;
  for (const Line& line : lines) {
    labels.emplace_back(line.fields.front());
    auto& entries = rows.emplace_back();
    Eigen::Index previous = 0;
    for (std::size_t k = 1; k < line.fields.size(); ++k) {
      const std::string_view token = line.fields[k];
      const auto colon = token.find(':');
      if (colon == std::string_view::npos) throw ParseError("expected index:value, got '" + std::string(token) + "'", line.number);
      const auto index = to_number(token.substr(0, colon));
      const auto value = to_number(token.substr(colon + 1));
      if (!index || *index < 1 || *index != std::floor(*index)) {
        throw ParseError("bad feature index in '" + std::string(token) + "'", line.number);
      }
      if (!value || !std::isfinite(*value)) throw ParseError("bad feature value in '" + std::string(token) + "'", line.number);
      const auto idx = static_cast<Eigen::Index>(*index);
      if (idx <= previous) throw ParseError("feature indices must be strictly ascending", line.number);
      previous = idx;
      max_index = std::max(max_index, idx);
      entries.emplace_back(idx - 1, *value);
    }
  }
  if (features == 0) features = max_index;
  if (max_index > features) throw ParseError("feature index " + std::to_string(max_index) + " exceeds the declared width");
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), features);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, v] : rows[i]) x(static_cast<Eigen::Index>(i), j) = v;
  }
  return labelled_dataset(std::move(x), labels);
}

Dataset load_libsvm(const std::filesystem::path& path, Eigen::Index features) {
  return parse_libsvm(read_file(path), features);
}

std::string format_csv(const Dataset& data, const std::vector<std::string>& comments) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "label";
  for (Eigen::Index j = 0; j < data.p(); ++j) out += ",x" + std::to_string(j + 1);
  out += "\n";
  const auto& names = data.label_names();
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const bool positive = data.y()[i] > 0;
    out += names.empty() ? (positive ? "1" : "-1") : names[positive ? 1 : 0];
    for (Eigen::Index j = 0; j < data.p(); ++j) out += "," + format_double(data.x()(i, j));
    out += "\n";
  }
  return out;
}

void save_csv(const Dataset& data, const std::filesystem::path& path, const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << format_csv(data, comments);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("split ratio must lie strictly between 0 and 1");
  Rng rng(seed);
  std::vector<Eigen::Index> first;
  std::vector<Eigen::Index> second;
  for (const double label : {-1.0, 1.0}) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (data.y()[i] == label) members.push_back(i);
    }
    if (members.size() < 2) {
      throw DataError("class " + std::to_string(static_cast<int>(label)) + " has fewer than two members; cannot split");
    }
    rng.shuffle(members);
    auto take = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(members.size())));
    take = std::clamp<std::size_t>(take, 1, members.size() - 1);
    first.insert(first.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    second.insert(second.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {data.subset(first), data.subset(second)};
}

}  // namespace dwd
