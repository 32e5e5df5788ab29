#include "diffadmm/tasks.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace diffadmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vec json_to_vec(const json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json vec_to_json(const Vec& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Mat load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset csv: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("ragged dataset csv: " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty dataset csv: " + path);
  Mat m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::shared_ptr<ScoreModel> build_prior(const json& spec, int dim) {
  const std::string family = spec.at("family").get<std::string>();
  if (family == "gaussian") {
    Vec mean;
    if (spec.contains("mean") && spec["mean"].is_array())
      mean = json_to_vec(spec["mean"]);
    else
      mean = Vec::Constant(dim, spec.value("mean", 0.0));
    return std::make_shared<GaussianScoreModel>(mean, spec.at("variance").get<double>());
  }
  if (family == "mixture") {
    std::vector<Vec> means;
    for (const auto& m : spec.at("means")) means.push_back(json_to_vec(m));
    return std::make_shared<MixtureScoreModel>(json_to_vec(spec.at("weights")),
                                               std::move(means),
                                               json_to_vec(spec.at("variances")));
  }
  if (family == "empirical") {
    if (spec.contains("csv"))
      return std::make_shared<EmpiricalScoreModel>(
          load_csv_matrix(spec["csv"].get<std::string>()));
    const auto& rows = spec.at("points");
    Mat data(rows.size(), json_to_vec(rows[0]).size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      data.row(i) = json_to_vec(rows[i]).transpose();
    return std::make_shared<EmpiricalScoreModel>(std::move(data));
  }
  throw std::runtime_error("unknown prior family: " + family);
}

LinearOperator build_operator(const json& spec, int dim) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "identity") return LinearOperator::mask([&] {
    std::vector<int> all(dim);
    for (int i = 0; i < dim; ++i) all[i] = i;
    return all;
  }(), dim);
  if (kind == "mask") {
    std::vector<int> keep;
    for (const auto& i : spec.at("coords")) keep.push_back(i.get<int>());
    return LinearOperator::mask(std::move(keep), dim);
  }
  if (kind == "decimate")
    return LinearOperator::decimate(spec.at("factor").get<int>(), dim);
  if (kind == "convolve")
    return LinearOperator::convolve(json_to_vec(spec.at("kernel")), dim);
  if (kind == "dense") {
    const auto& rows = spec.at("matrix");
    Mat a(rows.size(), dim);
    for (std::size_t i = 0; i < rows.size(); ++i)
      a.row(i) = json_to_vec(rows[i]).transpose();
    return LinearOperator::dense(std::move(a));
  }
  throw std::runtime_error("unknown operator kind: " + kind);
}

}  // namespace

OracleResult exact_gaussian_posterior(const Vec& prior_mean, double prior_var,
                                      const Mat& a, const Vec& y,
                                      double sigma_y) {
  if (prior_var <= 0.0)
    throw std::invalid_argument("exact_gaussian_posterior: prior_var must be > 0");
  if (sigma_y <= 0.0)
    throw std::invalid_argument("exact_gaussian_posterior: sigma_y must be > 0");
  if (a.cols() != prior_mean.size() || a.rows() != y.size())
    throw std::invalid_argument("exact_gaussian_posterior: shape mismatch");
  const int d = static_cast<int>(prior_mean.size());
  const double s2 = sigma_y * sigma_y;
  const Mat precision = Mat::Identity(d, d) / prior_var + a.transpose() * a / s2;
  Eigen::LLT<Mat> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("exact_gaussian_posterior: precision not SPD");
  OracleResult r;
  r.cov = llt.solve(Mat::Identity(d, d));
  r.mean = llt.solve(prior_mean / prior_var + a.transpose() * y / s2);
  r.ess = kNaN;
  r.method = "conjugate-exact";
  return r;
}

OracleResult importance_posterior(const ScoreModel& prior,
                                  const GuidanceModel& g, int n,
                                  std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("importance_posterior: n must be >= 2");
  if (prior.dim() != g.dim())
    throw std::invalid_argument("importance_posterior: dimension mismatch");
  const int d = prior.dim();
  const int batch = 4096;
  const int n_batches = (n + batch - 1) / batch;

  // pass 1: max log-weight for a stable normalization
  std::vector<double> batch_max(n_batches, -std::numeric_limits<double>::infinity());
  parallel_for(n_batches, [&](int b) {
    Rng rng(seed, static_cast<std::uint64_t>(b));
    const int lo = b * batch, hi = std::min(n, lo + batch);
    for (int i = lo; i < hi; ++i) {
      const double lw = g.log_c(prior.sample0(rng));
      batch_max[b] = std::max(batch_max[b], lw);
    }
  });
  double lw_max = -std::numeric_limits<double>::infinity();
  for (double v : batch_max) lw_max = std::max(lw_max, v);

  // pass 2: identical draws, accumulate weighted moments per batch
  std::vector<double> sw(n_batches, 0.0), sw2(n_batches, 0.0);
  std::vector<Vec> swx(n_batches, Vec::Zero(d));
  std::vector<Mat> swxx(n_batches, Mat::Zero(d, d));
  parallel_for(n_batches, [&](int b) {
    Rng rng(seed, static_cast<std::uint64_t>(b));
    const int lo = b * batch, hi = std::min(n, lo + batch);
    for (int i = lo; i < hi; ++i) {
      const Vec x = prior.sample0(rng);
      const double w = std::exp(g.log_c(x) - lw_max);
      sw[b] += w;
      sw2[b] += w * w;
      swx[b] += w * x;
      swxx[b] += w * x * x.transpose();
    }
  });
  double w_sum = 0.0, w2_sum = 0.0;
  Vec wx = Vec::Zero(d);
  Mat wxx = Mat::Zero(d, d);
  for (int b = 0; b < n_batches; ++b) {
    w_sum += sw[b];
    w2_sum += sw2[b];
    wx += swx[b];
    wxx += swxx[b];
  }
  if (w_sum <= 0.0)
    throw std::runtime_error("importance_posterior: all weights vanished");

  OracleResult r;
  r.mean = wx / w_sum;
  r.cov = wxx / w_sum - r.mean * r.mean.transpose();
  r.cov = 0.5 * (r.cov + r.cov.transpose());
  r.ess = w_sum * w_sum / w2_sum;
  r.method = "importance-sampling";
  r.reliable = r.ess >= 50.0;
  return r;
}

double psnr(const Vec& x, const Vec& ref, double peak) {
  if (x.size() != ref.size())
    throw std::invalid_argument("psnr: dimension mismatch");
  if (peak <= 0.0) throw std::invalid_argument("psnr: peak must be > 0");
  const double mse = (x - ref).squaredNorm() / static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

void check_psd(const Mat& c, const char* what) {
  if (c.rows() != c.cols())
    throw std::invalid_argument(std::string(what) + ": not square");
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::invalid_argument(std::string(what) + ": not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(c);
  if (es.eigenvalues().minCoeff() < -1e-9 * scale)
    throw std::invalid_argument(std::string(what) + ": not PSD");
}

}  // namespace

double wasserstein2_gaussian(const Vec& m1, const Mat& c1, const Vec& m2,
                             const Mat& c2) {
  if (m1.size() != m2.size())
    throw std::invalid_argument("wasserstein2_gaussian: mean size mismatch");
  check_psd(c1, "wasserstein2_gaussian: C1");
  check_psd(c2, "wasserstein2_gaussian: C2");
  const Mat s2 = symmetric_sqrt(c2);
  const Mat cross = symmetric_sqrt(Mat(s2 * c1 * s2));
  const double w2sq = (m1 - m2).squaredNorm() +
                      (c1 + c2 - 2.0 * cross).trace();
  return std::sqrt(std::max(0.0, w2sq));
}

std::pair<Vec, Mat> prior_moments(const ScoreModel& m) {
  const int d = m.dim();
  if (const auto* g = dynamic_cast<const GaussianScoreModel*>(&m))
    return {g->mean(), Mat(g->variance() * Mat::Identity(d, d))};
  if (const auto* e = dynamic_cast<const EmpiricalScoreModel*>(&m)) {
    const Mat& data = e->dataset();
    const Vec mu = data.colwise().mean().transpose();
    Mat c = Mat::Zero(d, d);
    for (int i = 0; i < data.rows(); ++i) {
      const Vec diff = data.row(i).transpose() - mu;
      c += diff * diff.transpose();
    }
    return {mu, Mat(c / std::max<int>(1, static_cast<int>(data.rows())))};
  }
  // mixture: law of total variance over components
  if (const auto* mix = dynamic_cast<const MixtureScoreModel*>(&m)) {
    Vec mu = Vec::Zero(d);
    for (int i = 0; i < mix->components(); ++i)
      mu += mix->weights()[i] * mix->means()[i];
    Mat c = Mat::Zero(d, d);
    for (int i = 0; i < mix->components(); ++i) {
      const Vec diff = mix->means()[i] - mu;
      c += mix->weights()[i] *
           (mix->variances()[i] * Mat::Identity(d, d) + diff * diff.transpose());
    }
    return {mu, c};
  }
  throw std::invalid_argument("prior_moments: unsupported model family");
}

std::vector<std::string> preset_names() {
  return {"inpaint-8", "sr-16to4", "deblur-16", "trajectory-32"};
}

json preset_spec(const std::string& name) {
  if (name == "inpaint-8")
    return json{{"name", "inpaint-8"},
                {"dim", 8},
                {"prior", {{"family", "gaussian"}, {"mean", 0.0}, {"variance", 1.0}}},
                {"guidance",
                 {{"type", "linear"},
                  {"operator", {{"kind", "mask"}, {"coords", {0, 2, 4, 6}}}}}},
                {"sigma_y", 0.05},
                {"truth_seed", 11},
                {"oracle", "conjugate-exact"}};
  if (name == "sr-16to4")
    return json{{"name", "sr-16to4"},
                {"dim", 16},
                {"prior", {{"family", "gaussian"}, {"mean", 0.0}, {"variance", 1.0}}},
                {"guidance",
                 {{"type", "linear"},
                  {"operator", {{"kind", "decimate"}, {"factor", 4}}}}},
                {"sigma_y", 0.05},
                {"truth_seed", 12},
                {"oracle", "conjugate-exact"}};
  if (name == "deblur-16")
    return json{{"name", "deblur-16"},
                {"dim", 16},
                {"prior", {{"family", "gaussian"}, {"mean", 0.0}, {"variance", 1.0}}},
                {"guidance",
                 {{"type", "linear"},
                  {"operator", {{"kind", "convolve"}, {"kernel", {0.25, 0.5, 0.25}}}}}},
                {"sigma_y", 0.05},
                {"truth_seed", 13},
                {"oracle", "conjugate-exact"}};
  if (name == "trajectory-32")
    return json{{"name", "trajectory-32"},
                {"dim", 32},
                {"prior", {{"family", "gaussian"}, {"mean", 0.0}, {"variance", 1.0}}},
                {"guidance",
                 {{"type", "waypoint"},
                  {"blocks", 8},
                  {"block_dim", 4},
                  {"proj_coords", {0, 1}},
                  {"waypoint_blocks", {2, 4, 7}},
                  {"weight", 2.0}}},
                {"sigma_y", 0.5},
                {"truth_seed", 14},
                {"oracle", "importance-sampling"}};
  throw std::runtime_error("unknown preset: " + name);
}

Task build_task(const json& spec_in) {
  json spec = spec_in.is_string() ? preset_spec(spec_in.get<std::string>())
                                  : spec_in;
  Task task;
  task.spec = spec;
  task.name = spec.value("name", "custom");
  task.dim = spec.at("dim").get<int>();
  if (task.dim < 1 || task.dim > kMaxDim)
    throw std::runtime_error("task dim outside 1.." + std::to_string(kMaxDim));
  task.sigma_y = spec.value("sigma_y", 0.05);
  task.truth_seed = spec.value("truth_seed", 0ULL);
  task.oracle_kind = spec.value("oracle", "none");
  task.prior = build_prior(spec.at("prior"), task.dim);
  if (task.prior->dim() != task.dim)
    throw std::runtime_error("task prior dimension mismatch");

  if (const auto* g = dynamic_cast<const GaussianScoreModel*>(task.prior.get())) {
    task.prior_mean = g->mean();
    task.prior_var = g->variance();
  }

  Rng rng(task.truth_seed, 0);
  task.x_star = task.prior->sample0(rng);

  const json& gspec = spec.at("guidance");
  const std::string type = gspec.at("type").get<std::string>();
  if (type == "linear" || type == "tanh-linear") {
    LinearOperator op = build_operator(gspec.at("operator"), task.dim);
    Vec y;
    if (gspec.contains("y_csv")) {
      const Mat rows = load_csv_matrix(gspec["y_csv"].get<std::string>());
      y = rows.rows() == 1 ? Vec(rows.row(0).transpose()) : Vec(rows.col(0));
    } else if (gspec.contains("y")) {
      y = json_to_vec(gspec["y"]);
    } else if (type == "linear") {
      y = op.apply(task.x_star) + task.sigma_y * rng.normal_vec(op.rows());
    } else {
      y = op.apply(Vec(task.x_star.array().tanh())) +
          task.sigma_y * rng.normal_vec(op.rows());
    }
    if (type == "linear")
      task.guidance = std::make_shared<LinearGaussianGuidance>(std::move(op),
                                                               std::move(y),
                                                               task.sigma_y);
    else
      task.guidance = std::make_shared<TanhLinearGuidance>(std::move(op),
                                                           std::move(y),
                                                           task.sigma_y);
    if (type != "linear" && task.oracle_kind == "conjugate-exact")
      throw std::runtime_error("conjugate oracle requires linear guidance");
  } else if (type == "waypoint") {
    const int blocks = gspec.at("blocks").get<int>();
    const int block_dim = gspec.at("block_dim").get<int>();
    std::vector<int> proj;
    for (const auto& c : gspec.at("proj_coords")) proj.push_back(c.get<int>());
    const double weight = gspec.at("weight").get<double>();
    // target noise scale consistent with weight = 1/(2 sigma^2)
    const double sigma_wp = 1.0 / std::sqrt(2.0 * weight);
    std::vector<WaypointGuidance::Waypoint> wps;
    for (const auto& bj : gspec.at("waypoint_blocks")) {
      const int b = bj.get<int>();
      Vec target(proj.size());
      for (std::size_t j = 0; j < proj.size(); ++j)
        target[j] = task.x_star[b * block_dim + proj[j]] +
                    sigma_wp * rng.next_normal();
      wps.push_back({b, std::move(target)});
    }
    task.guidance = std::make_shared<WaypointGuidance>(blocks, block_dim,
                                                       std::move(proj),
                                                       std::move(wps), weight);
    if (task.oracle_kind == "conjugate-exact")
      throw std::runtime_error("conjugate oracle requires linear guidance");
  } else {
    throw std::runtime_error("unknown guidance type: " + type);
  }
  if (task.oracle_kind == "conjugate-exact" && !task.prior_var)
    throw std::runtime_error("conjugate oracle requires a gaussian prior");
  return task;
}

std::uint64_t content_hash(const json& spec) {
  const std::string s = spec.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::mutex g_cache_mutex;

json oracle_to_json(const OracleResult& r) {
  json rows = json::array();
  for (int i = 0; i < r.cov.rows(); ++i)
    rows.push_back(vec_to_json(r.cov.row(i).transpose()));
  return json{{"mean", vec_to_json(r.mean)},
              {"cov", rows},
              {"ess", std::isnan(r.ess) ? json(nullptr) : json(r.ess)},
              {"method", r.method},
              {"reliable", r.reliable}};
}

OracleResult oracle_from_json(const json& j) {
  OracleResult r;
  r.mean = json_to_vec(j.at("mean"));
  const auto& rows = j.at("cov");
  r.cov.resize(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    r.cov.row(i) = json_to_vec(rows[i]).transpose();
  r.ess = j.at("ess").is_null() ? kNaN : j.at("ess").get<double>();
  r.method = j.at("method").get<std::string>();
  r.reliable = j.at("reliable").get<bool>();
  return r;
}

}  // namespace

OracleResult task_oracle(const Task& task, const std::string& cache_dir,
                         int is_samples, std::uint64_t is_seed) {
  if (task.oracle_kind == "none")
    throw std::runtime_error("task '" + task.name + "' has no oracle");

  std::filesystem::path cache_file;
  if (!cache_dir.empty()) {
    char name[64];
    std::snprintf(name, sizeof(name), "oracle-%016llx.json",
                  static_cast<unsigned long long>(content_hash(task.spec)));
    cache_file = std::filesystem::path(cache_dir) / name;
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    if (std::filesystem::exists(cache_file)) {
      std::ifstream in(cache_file);
      json j;
      in >> j;
      return oracle_from_json(j);
    }
  }

  OracleResult r;
  if (task.oracle_kind == "conjugate-exact") {
    const auto* lg = dynamic_cast<const LinearGaussianGuidance*>(task.guidance.get());
    if (lg == nullptr || !task.prior_mean)
      throw std::runtime_error("conjugate oracle needs gaussian prior + linear guidance");
    r = exact_gaussian_posterior(*task.prior_mean, *task.prior_var,
                                 lg->op().to_dense(), lg->y(), lg->sigma_y());
  } else if (task.oracle_kind == "importance-sampling") {
    r = importance_posterior(*task.prior, *task.guidance, is_samples, is_seed);
  } else {
    throw std::runtime_error("unknown oracle kind: " + task.oracle_kind);
  }

  if (!cache_file.empty()) {
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    std::filesystem::create_directories(cache_file.parent_path());
    std::ofstream out(cache_file);
    out << oracle_to_json(r).dump(2) << "\n";
  }
  return r;
}

}  // namespace diffadmm
