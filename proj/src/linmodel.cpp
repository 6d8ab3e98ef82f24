#include "nuisblue/linmodel.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "textio.hpp"

namespace nuisblue {

namespace {

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw ShapeViolation(std::string("model: non-finite entries in ") + what);
  }
}

double parse_double(const std::string& token, int line) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + token.size()) {
    throw ParseError(line, "bad number '" + token + "'");
  }
  return v;
}

long parse_count(const std::string& token, int line) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const long v = std::strtol(begin, &end, 10);
  if (end != begin + token.size() || v < 0) {
    throw ParseError(line, "bad count '" + token + "'");
  }
  return v;
}

// Lines of the input with blank ones dropped; pairs are (1-based line, text).
std::vector<std::pair<int, std::string>> content_lines(const std::string& text) {
  std::vector<std::pair<int, std::string>> out;
  const auto raw = textio::split_lines(text);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!textio::is_blank(raw[i])) {
      out.emplace_back(static_cast<int>(i) + 1, raw[i]);
    }
  }
  return out;
}

}  // namespace

const LinearNuisanceModel& validate(const LinearNuisanceModel& model) {
  const Index n = model.n();
  const Index l = model.l();
  const Index m = model.m();
  if (n < 1) throw ShapeViolation("model: empty observation vector");
  if (l < 1) throw ShapeViolation("model: H must have at least one column");
  if (model.H.rows() != n) throw ShapeViolation("model: H row count != N");
  if (model.G.rows() != n && m > 0) {
    throw ShapeViolation("model: G row count != N");
  }
  require_finite(model.y, "y");
  require_finite(model.H, "H");
  if (m > 0) require_finite(model.G, "G");
  if (!(model.sigma > 0.0) || !std::isfinite(model.sigma)) {
    throw ShapeViolation("model: sigma must be positive and finite");
  }
  if (n <= l || n <= m || n < l + m) {
    throw ShapeViolation("model: need N > L, N > M, N >= L + M");
  }
  Matrix stacked(n, l + m);
  stacked.leftCols(l) = model.H;
  if (m > 0) stacked.rightCols(m) = model.G;
  if (rank_of(stacked).rank < l + m) {
    throw RankViolation("model: [H G] not full column rank");
  }
  return model;
}

LinearNuisanceModel whiten(const LinearNuisanceModel& model,
                           const Matrix& cov) {
  validate(model);
  if (cov.rows() != model.n() || cov.cols() != model.n()) {
    throw ShapeViolation("whiten: covariance shape mismatch");
  }
  const Matrix w = inv_sqrt_sym(cov);
  LinearNuisanceModel out;
  out.y = w * model.y;
  out.H = w * model.H;
  out.G = model.m() > 0 ? Matrix(w * model.G) : Matrix(model.n(), 0);
  out.sigma = model.sigma;
  return out;
}

std::string model_to_text(const LinearNuisanceModel& model) {
  const Index n = model.n();
  const Index l = model.l();
  const Index m = model.m();
  std::ostringstream out;
  out << n << ' ' << l << ' ' << m << ' '
      << textio::fmt_sig(model.sigma, 17) << '\n';
  for (Index i = 0; i < n; ++i) {
    out << (i ? " " : "") << textio::fmt_sig(model.y(i), 17);
  }
  out << '\n';
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < l; ++j) {
      out << (j ? " " : "") << textio::fmt_sig(model.H(i, j), 17);
    }
    out << '\n';
  }
  for (Index i = 0; i < n && m > 0; ++i) {
    for (Index j = 0; j < m; ++j) {
      out << (j ? " " : "") << textio::fmt_sig(model.G(i, j), 17);
    }
    out << '\n';
  }
  return out.str();
}

LinearNuisanceModel model_from_text(const std::string& text) {
  const auto lines = content_lines(text);
  std::size_t cursor = 0;
  auto next_line = [&]() -> const std::pair<int, std::string>& {
    if (cursor >= lines.size()) {
      const int at = lines.empty() ? 1 : lines.back().first;
      throw ParseError(at, "unexpected end of input");
    }
    return lines[cursor++];
  };

  const auto& header = next_line();
  const auto head_tokens = textio::split_ws(header.second);
  if (head_tokens.size() != 4) {
    throw ParseError(header.first, "header must be 'N L M sigma'");
  }
  const long n = parse_count(head_tokens[0], header.first);
  const long l = parse_count(head_tokens[1], header.first);
  const long m = parse_count(head_tokens[2], header.first);
  LinearNuisanceModel model;
  model.sigma = parse_double(head_tokens[3], header.first);

  auto read_row = [&](Vector& row, long want) {
    const auto& line = next_line();
    const auto tokens = textio::split_ws(line.second);
    if (static_cast<long>(tokens.size()) != want) {
      std::ostringstream msg;
      msg << "expected " << want << " values, got " << tokens.size();
      throw ParseError(line.first, msg.str());
    }
    row.resize(want);
    for (long j = 0; j < want; ++j) {
      row(j) = parse_double(tokens[j], line.first);
    }
  };

  Vector row;
  read_row(row, n);
  model.y = row;
  model.H.resize(n, l);
  for (long i = 0; i < n; ++i) {
    read_row(row, l);
    model.H.row(i) = row.transpose();
  }
  model.G.resize(n, m);
  for (long i = 0; i < n && m > 0; ++i) {
    read_row(row, m);
    model.G.row(i) = row.transpose();
  }
  if (cursor != lines.size()) {
    throw ParseError(lines[cursor].first, "trailing content after model");
  }
  return model;
}

void save_model(const LinearNuisanceModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_model: cannot open " + path);
  out << model_to_text(model);
  if (!out) throw Error("save_model: write failed for " + path);
}

LinearNuisanceModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_model: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_text(buf.str());
}

}  // namespace nuisblue
