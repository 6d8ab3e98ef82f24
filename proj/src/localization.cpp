#include "nuisblue/localization.hpp"

#include <cmath>

#include "nuisblue/differencing.hpp"
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "textio.hpp"

namespace nuisblue {

namespace {

constexpr double kLog10 = 2.302585092994045684;  // ln 10

void require_scene_shapes(const LocScene& scene) {
  if (scene.dim != 2 && scene.dim != 3) {
    throw ShapeViolation("scene: dim must be 2 or 3");
  }
  const Index n = scene.anchors.rows();
  if (scene.anchors.cols() != scene.dim) {
    throw ShapeViolation("scene: anchor width != dim");
  }
  if (n < scene.dim + 2) {
    throw ShapeViolation("scene: need at least dim + 2 anchors");
  }
  if (scene.target.size() != scene.dim) {
    throw ShapeViolation("scene: target width != dim");
  }
  if (!scene.anchors.allFinite() || !scene.target.allFinite()) {
    throw ShapeViolation("scene: non-finite geometry");
  }
  if (!std::isfinite(scene.r0) || !std::isfinite(scene.p0) ||
      !std::isfinite(scene.gamma) || !std::isfinite(scene.sigma) ||
      scene.sigma < 0.0) {
    throw ShapeViolation("scene: bad scalar parameter");
  }
}

}  // namespace

std::string_view model_name(ModelLabel label) {
  switch (label) {
    case ModelLabel::TSE_TOA: return "TSE-TOA";
    case ModelLabel::SD_TOA: return "SD-TOA";
    case ModelLabel::SD_TDOA: return "SD-TDOA";
    case ModelLabel::SD_RSS: return "SD-RSS";
  }
  return "?";
}

const LocScene& validate_scene(const LocScene& scene) {
  require_scene_shapes(scene);
  const Index n = scene.anchors.rows();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if ((scene.anchors.row(i) - scene.anchors.row(j)).norm() == 0.0) {
        throw ShapeViolation("scene: duplicate anchors");
      }
    }
  }
  ranges(scene);  // throws TargetOnAnchor when degenerate
  return scene;
}

Vector ranges_from(const Matrix& anchors, const Vector& point) {
  if (anchors.cols() != point.size()) {
    throw ShapeViolation("ranges_from: dimension mismatch");
  }
  const Index n = anchors.rows();
  Vector r(n);
  const double scale = std::max(1.0, anchors.cwiseAbs().maxCoeff());
  for (Index i = 0; i < n; ++i) {
    r(i) = (point - anchors.row(i).transpose()).norm();
    if (r(i) <= 1e-12 * scale) {
      throw TargetOnAnchor("ranges_from: point coincides with an anchor");
    }
  }
  return r;
}

Vector ranges(const LocScene& scene) {
  return ranges_from(scene.anchors, scene.target);
}

Vector simulate_toa(const LocScene& scene, Rng& rng) {
  require_scene_shapes(scene);
  const Vector r = ranges(scene);
  Vector d(r.size());
  for (Index i = 0; i < r.size(); ++i) {
    d(i) = r(i) + scene.r0 + scene.sigma * rng.next_gaussian();
  }
  return d;
}

Vector simulate_rss(const LocScene& scene, Rng& rng) {
  require_scene_shapes(scene);
  const Vector r = ranges(scene);
  Vector p(r.size());
  for (Index i = 0; i < r.size(); ++i) {
    p(i) = scene.p0 - 10.0 * scene.gamma * std::log10(r(i)) +
           scene.sigma * rng.next_gaussian();
  }
  return p;
}

BuiltLinearModel build_tse(const Vector& d, const Matrix& anchors,
                           const Vector& x_prev, double sigma) {
  const Index n = anchors.rows();
  const Index dim = anchors.cols();
  if (d.size() != n) throw ShapeViolation("build_tse: data length mismatch");
  Vector r_prev;
  try {
    r_prev = ranges_from(anchors, x_prev);
  } catch (const TargetOnAnchor&) {
    throw ExpansionPointOnAnchor("build_tse: expansion point on an anchor");
  }

  BuiltLinearModel built;
  built.label = ModelLabel::TSE_TOA;
  built.position_dim = dim;
  built.model.H.resize(n, dim);
  for (Index i = 0; i < n; ++i) {
    built.model.H.row(i) =
        (x_prev - anchors.row(i).transpose()).transpose() / r_prev(i);
  }
  built.model.y = d - r_prev + built.model.H * x_prev;
  built.model.G = Matrix::Ones(n, 1);
  built.model.sigma = sigma;
  return built;
}

BuiltLinearModel build_sd_toa(const Vector& d, const Matrix& anchors,
                              const Vector& whiten_ranges, double sigma,
                              bool whitened) {
  const Index n = anchors.rows();
  const Index dim = anchors.cols();
  if (d.size() != n) {
    throw ShapeViolation("build_sd_toa: data length mismatch");
  }

  Vector z(n);
  Matrix h(n, dim);
  Matrix g(n, 2);
  for (Index i = 0; i < n; ++i) {
    z(i) = d(i) * d(i) - anchors.row(i).squaredNorm();
    h.row(i) = -2.0 * anchors.row(i);
    g(i, 0) = 1.0;
    g(i, 1) = 2.0 * d(i);
  }

  if (whitened) {
    if (whiten_ranges.size() != n) {
      throw ShapeViolation("build_sd_toa: whitening vector length mismatch");
    }
    for (Index i = 0; i < n; ++i) {
      if (!(whiten_ranges(i) > 0.0)) {
        throw NonPositiveRange("build_sd_toa: non-positive whitening range");
      }
      const double w = 1.0 / whiten_ranges(i);
      z(i) *= w;
      h.row(i) *= w;
      g.row(i) *= w;
    }
  }

  BuiltLinearModel built;
  built.label = ModelLabel::SD_TOA;
  built.position_dim = dim;
  built.model.y = z;
  built.model.H = h;
  built.model.G = g;
  built.model.sigma = 2.0 * sigma;
  return built;
}

BuiltLinearModel build_sd_tdoa(const Vector& d, const Matrix& anchors,
                               Index ref_j, const Vector& whiten_ranges,
                               double sigma, bool whitened) {
  const Index n = anchors.rows();
  const Index dim = anchors.cols();
  if (d.size() != n) {
    throw ShapeViolation("build_sd_tdoa: data length mismatch");
  }
  if (ref_j < 0 || ref_j >= n) {
    throw IndexOutOfRange("build_sd_tdoa: reference outside [0, N)");
  }

  Vector z(n - 1);
  Matrix h(n - 1, dim);
  Matrix g(n - 1, 1);
  Index row = 0;
  const double sj2 = anchors.row(ref_j).squaredNorm();
  for (Index i = 0; i < n; ++i) {
    if (i == ref_j) continue;
    const double dij = d(i) - d(ref_j);
    z(row) = dij * dij - anchors.row(i).squaredNorm() + sj2;
    h.row(row) = -2.0 * (anchors.row(i) - anchors.row(ref_j));
    g(row, 0) = -2.0 * dij;
    ++row;
  }

  BuiltLinearModel built;
  built.label = ModelLabel::SD_TDOA;
  built.position_dim = dim;
  built.model.sigma = 2.0 * sigma;

  if (whitened) {
    if (whiten_ranges.size() != n) {
      throw ShapeViolation("build_sd_tdoa: whitening vector length mismatch");
    }
    Vector kept(n - 1);
    row = 0;
    for (Index i = 0; i < n; ++i) {
      if (i == ref_j) continue;
      if (!(whiten_ranges(i) > 0.0)) {
        throw NonPositiveRange("build_sd_tdoa: non-positive whitening range");
      }
      kept(row++) = whiten_ranges(i);
    }
    const Matrix gj = single_ref_operator(n, ref_j);
    const Matrix cov = kept.asDiagonal() * (gj * gj.transpose()) *
                       kept.asDiagonal();
    const Matrix w = inv_sqrt_sym(cov);
    built.model.y = w * z;
    built.model.H = w * h;
    built.model.G = w * g;
  } else {
    built.model.y = z;
    built.model.H = h;
    built.model.G = g;
  }
  return built;
}

BuiltLinearModel build_sd_rss(const Vector& p, const Matrix& anchors,
                              double gamma, double sigma, bool whitened) {
  const Index n = anchors.rows();
  const Index dim = anchors.cols();
  if (p.size() != n) {
    throw ShapeViolation("build_sd_rss: data length mismatch");
  }
  if (!(gamma > 0.0)) {
    throw NonPositiveGamma("build_sd_rss: gamma must be positive");
  }

  BuiltLinearModel built;
  built.label = ModelLabel::SD_RSS;
  built.position_dim = dim;
  built.model.sigma = kLog10 * sigma / (5.0 * gamma);

  Vector y(n);
  Matrix h(n, dim + 1);
  Matrix g(n, 1);
  for (Index i = 0; i < n; ++i) {
    const double pp = std::pow(10.0, p(i) / (5.0 * gamma));
    const double si2 = anchors.row(i).squaredNorm();
    if (whitened) {
      y(i) = si2 * pp;
      h.row(i).head(dim) = 2.0 * pp * anchors.row(i);
      h(i, dim) = -pp;
      g(i, 0) = 1.0;
    } else {
      y(i) = si2;
      h.row(i).head(dim) = 2.0 * anchors.row(i);
      h(i, dim) = -1.0;
      g(i, 0) = 1.0 / pp;
    }
  }
  built.model.y = y;
  built.model.H = h;
  built.model.G = g;
  return built;
}

double crlb_toa(const LocScene& scene) {
  validate_scene(scene);
  if (!(scene.sigma > 0.0)) {
    throw ShapeViolation("crlb_toa: sigma must be positive");
  }
  const Index n = scene.anchors.rows();
  const Index dim = scene.dim;
  const Vector r = ranges(scene);
  Matrix jac(n, dim + 1);
  for (Index i = 0; i < n; ++i) {
    jac.row(i).head(dim) =
        (scene.target - scene.anchors.row(i).transpose()).transpose() / r(i);
    jac(i, dim) = 1.0;
  }
  if (rank_of(jac).rank < dim + 1) {
    throw SingularFIM("crlb_toa: singular information matrix");
  }
  const Matrix cov =
      scene.sigma * scene.sigma * (jac.transpose() * jac).inverse();
  return cov.topLeftCorner(dim, dim).trace();
}

double crlb_rss(const LocScene& scene) {
  validate_scene(scene);
  if (!(scene.sigma > 0.0)) {
    throw ShapeViolation("crlb_rss: sigma must be positive");
  }
  if (!(scene.gamma > 0.0)) {
    throw NonPositiveGamma("crlb_rss: gamma must be positive");
  }
  const Index n = scene.anchors.rows();
  const Index dim = scene.dim;
  const Vector r = ranges(scene);
  const double k = 10.0 * scene.gamma / kLog10;
  Matrix jac(n, dim + 1);
  for (Index i = 0; i < n; ++i) {
    jac.row(i).head(dim) =
        -k *
        (scene.target - scene.anchors.row(i).transpose()).transpose() /
        (r(i) * r(i));
    jac(i, dim) = 1.0;
  }
  if (rank_of(jac).rank < dim + 1) {
    throw SingularFIM("crlb_rss: singular information matrix");
  }
  const Matrix cov =
      scene.sigma * scene.sigma * (jac.transpose() * jac).inverse();
  return cov.topLeftCorner(dim, dim).trace();
}

std::string scene_to_text(const LocScene& scene) {
  std::ostringstream out;
  out << scene.dim << ' ' << scene.anchors.rows() << '\n';
  for (Index i = 0; i < scene.anchors.rows(); ++i) {
    for (Index j = 0; j < scene.dim; ++j) {
      out << (j ? " " : "") << textio::fmt_sig(scene.anchors(i, j), 17);
    }
    out << '\n';
  }
  for (Index j = 0; j < scene.dim; ++j) {
    out << (j ? " " : "") << textio::fmt_sig(scene.target(j), 17);
  }
  out << '\n';
  out << "r0=" << textio::fmt_sig(scene.r0, 17) << '\n';
  out << "p0=" << textio::fmt_sig(scene.p0, 17) << '\n';
  out << "gamma=" << textio::fmt_sig(scene.gamma, 17) << '\n';
  out << "sigma=" << textio::fmt_sig(scene.sigma, 17) << '\n';
  return out.str();
}

namespace {

double parse_double_at(const std::string& token, int line) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + token.size()) {
    throw ParseError(line, "bad number '" + token + "'");
  }
  return v;
}

}  // namespace

LocScene scene_from_text(const std::string& text) {
  const auto raw = textio::split_lines(text);
  std::vector<std::pair<int, std::string>> lines;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!textio::is_blank(raw[i])) {
      lines.emplace_back(static_cast<int>(i) + 1, raw[i]);
    }
  }
  std::size_t cursor = 0;
  auto next_line = [&]() -> const std::pair<int, std::string>& {
    if (cursor >= lines.size()) {
      const int at = lines.empty() ? 1 : lines.back().first;
      throw ParseError(at, "unexpected end of scene");
    }
    return lines[cursor++];
  };

  const auto& header = next_line();
  const auto head = textio::split_ws(header.second);
  if (head.size() != 2) {
    throw ParseError(header.first, "header must be 'dim N'");
  }
  LocScene scene;
  scene.dim = static_cast<int>(parse_double_at(head[0], header.first));
  const long n = static_cast<long>(parse_double_at(head[1], header.first));
  if ((scene.dim != 2 && scene.dim != 3) || n < 1) {
    throw ParseError(header.first, "bad dim or anchor count");
  }

  auto read_point = [&](Vector& point) {
    const auto& line = next_line();
    const auto tokens = textio::split_ws(line.second);
    if (static_cast<int>(tokens.size()) != scene.dim) {
      throw ParseError(line.first, "expected one coordinate per dimension");
    }
    point.resize(scene.dim);
    for (int j = 0; j < scene.dim; ++j) {
      point(j) = parse_double_at(tokens[j], line.first);
    }
  };

  scene.anchors.resize(n, scene.dim);
  Vector point;
  for (long i = 0; i < n; ++i) {
    read_point(point);
    scene.anchors.row(i) = point.transpose();
  }
  read_point(point);
  scene.target = point;

  while (cursor < lines.size()) {
    const auto& line = next_line();
    const auto eq = line.second.find('=');
    if (eq == std::string::npos) {
      throw ParseError(line.first, "expected key=value");
    }
    std::string key = line.second.substr(0, eq);
    std::string value = line.second.substr(eq + 1);
    const auto trim = [](std::string& s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
    };
    trim(key);
    trim(value);
    const double v = parse_double_at(value, line.first);
    if (key == "r0") {
      scene.r0 = v;
    } else if (key == "p0") {
      scene.p0 = v;
    } else if (key == "gamma") {
      scene.gamma = v;
    } else if (key == "sigma") {
      scene.sigma = v;
    } else {
      throw ParseError(line.first, "unknown scene key '" + key + "'");
    }
  }
  return scene;
}

void save_scene(const LocScene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_scene: cannot open " + path);
  out << scene_to_text(scene);
  if (!out) throw Error("save_scene: write failed for " + path);
}

LocScene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_scene: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return scene_from_text(buf.str());
}

}  // namespace nuisblue
