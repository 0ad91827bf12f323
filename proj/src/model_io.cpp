#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "emery/characteristics.hpp"

namespace emery {

namespace {

// Minimal TOML subset for model files: `key = value` lines, [[table]] /
// [[table.sub]] headers, numbers and (nested) arrays, # comments. That is the
// whole documented schema; anything else is rejected loudly.
struct TValue {
  bool is_number = false;
  double number = 0.0;
  std::vector<TValue> array;
};

struct ModelParseError : std::runtime_error {
  ModelParseError(int line, const std::string& message)
      : std::runtime_error("model file, line " + std::to_string(line) + ": " + message) {}
};

class ValueParser {
 public:
  ValueParser(const std::string& text, int line) : s_(text), line_(line) {}

  TValue parse() {
    TValue v = parse_value();
    skip_ws();
    if (pos_ != s_.size()) throw ModelParseError(line_, "trailing characters after value");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  TValue parse_value() {
    skip_ws();
    if (pos_ >= s_.size()) throw ModelParseError(line_, "missing value");
    if (s_[pos_] == '[') {
      ++pos_;
      TValue arr;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      while (true) {
        arr.array.push_back(parse_value());
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          skip_ws();
          if (pos_ < s_.size() && s_[pos_] == ']') {  // trailing comma
            ++pos_;
            return arr;
          }
          continue;
        }
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return arr;
        }
        throw ModelParseError(line_, "expected ',' or ']' in array");
      }
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '.' || s_[pos_] == '+' || s_[pos_] == '-' ||
                                s_[pos_] == '_'))
      ++pos_;
    std::string tok = s_.substr(start, pos_ - start);
    TValue v;
    v.is_number = true;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v.number);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw ModelParseError(line_, "expected a number, got '" + tok + "'");
    return v;
  }

  const std::string& s_;
  int line_;
  std::size_t pos_ = 0;
};

int bracket_depth_delta(const std::string& s) {
  int d = 0;
  for (char c : s) {
    if (c == '[') ++d;
    if (c == ']') --d;
  }
  return d;
}

std::string strip_comment(const std::string& s) {
  std::size_t h = s.find('#');
  return h == std::string::npos ? s : s.substr(0, h);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

ComplexValue to_complex(const TValue& v, int line) {
  if (v.is_number) return ComplexValue(v.number);
  if (v.array.size() == 2 && v.array[0].is_number && v.array[1].is_number)
    return ComplexValue(v.array[0].number, v.array[1].number);
  throw ModelParseError(line, "expected a [re, im] pair");
}

std::vector<ComplexValue> to_complex_vector(const TValue& v, int line) {
  std::vector<ComplexValue> out;
  if (v.is_number) {
    out.emplace_back(v.number);
    return out;
  }
  // Either a single pair or an array of pairs/numbers.
  if (v.array.size() == 2 && v.array[0].is_number && v.array[1].is_number) {
    out.push_back(to_complex(v, line));
    return out;
  }
  for (const TValue& item : v.array) out.push_back(to_complex(item, line));
  return out;
}

void flatten_numbers(const TValue& v, std::vector<double>& out, int line) {
  if (v.is_number) {
    out.push_back(v.number);
    return;
  }
  for (const TValue& item : v.array) flatten_numbers(item, out, line);
}

}  // namespace

LevyModel parse_model_text(const std::string& text) {
  LevyModel model;
  bool have_dim = false, have_cov = false;
  std::vector<double> cov_flat;
  int cov_line = 0;

  enum class Section { Root, Jump, Scheduled, Outcome } section = Section::Root;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    // Join continuation lines of a multiline array.
    int depth = bracket_depth_delta(line);
    while (depth > 0 && in) {
      std::string more;
      if (!std::getline(in, more)) break;
      ++line_no;
      line += " " + trim(strip_comment(more));
      depth = bracket_depth_delta(line);
    }
    if (line.empty()) continue;

    if (line.rfind("[[", 0) == 0) {
      if (line.size() < 5 || line.substr(line.size() - 2) != "]]")
        throw ModelParseError(line_no, "malformed table header");
      std::string name = trim(line.substr(2, line.size() - 4));
      if (name == "jumps") {
        model.atoms.emplace_back();
        section = Section::Jump;
      } else if (name == "scheduled") {
        model.scheduled.emplace_back();
        section = Section::Scheduled;
      } else if (name == "scheduled.outcomes") {
        if (model.scheduled.empty())
          throw ModelParseError(line_no, "[[scheduled.outcomes]] before any [[scheduled]]");
        model.scheduled.back().outcomes.emplace_back();
        section = Section::Outcome;
      } else {
        throw ModelParseError(line_no, "unknown table '" + name + "'");
      }
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ModelParseError(line_no, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    TValue value = ValueParser(trim(line.substr(eq + 1)), line_no).parse();

    switch (section) {
      case Section::Root:
        if (key == "dim") {
          if (!value.is_number) throw ModelParseError(line_no, "dim must be an integer");
          model.dim = static_cast<int>(value.number);
          have_dim = true;
        } else if (key == "drift") {
          model.drift = to_complex_vector(value, line_no);
        } else if (key == "cov_hat") {
          flatten_numbers(value, cov_flat, line_no);
          have_cov = true;
          cov_line = line_no;
        } else {
          throw ModelParseError(line_no, "unknown key '" + key + "'");
        }
        break;
      case Section::Jump:
        if (key == "atom")
          model.atoms.back().x = to_complex_vector(value, line_no);
        else if (key == "rate") {
          if (!value.is_number) throw ModelParseError(line_no, "rate must be a number");
          model.atoms.back().rate = value.number;
        } else {
          throw ModelParseError(line_no, "unknown key '" + key + "' in [[jumps]]");
        }
        break;
      case Section::Scheduled:
        if (key == "time") {
          if (!value.is_number) throw ModelParseError(line_no, "time must be a number");
          model.scheduled.back().time = value.number;
        } else {
          throw ModelParseError(line_no, "unknown key '" + key + "' in [[scheduled]]");
        }
        break;
      case Section::Outcome:
        if (key == "value")
          model.scheduled.back().outcomes.back().value = to_complex_vector(value, line_no);
        else if (key == "prob") {
          if (!value.is_number) throw ModelParseError(line_no, "prob must be a number");
          model.scheduled.back().outcomes.back().prob = value.number;
        } else {
          throw ModelParseError(line_no, "unknown key '" + key + "' in [[scheduled.outcomes]]");
        }
        break;
    }
  }

  if (!have_dim) throw std::invalid_argument("model file is missing 'dim'");
  if (model.drift.empty())
    model.drift.assign(static_cast<std::size_t>(model.dim), ComplexValue(0.0));
  int n2 = 2 * model.dim;
  model.cov_hat = RMat(n2);
  if (have_cov) {
    if (static_cast<int>(cov_flat.size()) != n2 * n2)
      throw ModelParseError(cov_line, "cov_hat must contain (2*dim)^2 numbers");
    for (int i = 0; i < n2; ++i)
      for (int j = 0; j < n2; ++j)
        model.cov_hat(i, j) = cov_flat[static_cast<std::size_t>(i * n2 + j)];
  }
  validate(model);
  return model;
}

LevyModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model_text(buf.str());
}

}  // namespace emery
