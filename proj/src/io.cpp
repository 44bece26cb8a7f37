#include "si/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "si/errors.hpp"

namespace si::io {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("io: " + what);
}

template <class T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

void write_mat_payload(std::ostream& os, const Mat& m) {
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double)) * m.size());
}

Mat read_mat_payload(std::istream& is) {
  const auto rows = read_raw<std::uint32_t>(is);
  const auto cols = read_raw<std::uint32_t>(is);
  require(is.good(), "truncated matrix header");
  Mat m(rows, cols);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double)) * m.size());
  require(is.good(), "truncated matrix payload");
  return m;
}

}  // namespace

Mat read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (...) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      require(rows.empty(), "non-numeric row in " + path.string());
      continue;  // header line
    }
    if (!rows.empty()) require(row.size() == rows.front().size(), "ragged csv");
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), "empty csv " + path.string());
  Mat m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_csv(const std::filesystem::path& path, const Mat& m,
               const std::vector<std::string>& header) {
  std::ofstream out(path);
  require(out.good(), "cannot write " + path.string());
  out.precision(17);
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j)
      out << header[j] << (j + 1 < header.size() ? "," : "\n");
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << m(i, j) << (j + 1 < m.cols() ? "," : "\n");
}

Mat read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path.string());
  return read_mat_payload(in);
}

void write_matrix(const std::filesystem::path& path, const Mat& m) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path.string());
  write_mat_payload(out, m);
}

GaussianMixture read_mixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path.string());
  json j = json::parse(in);
  const auto& w = j.at("weights");
  const int n = static_cast<int>(w.size());
  Vec weights(n);
  for (int i = 0; i < n; ++i) weights[i] = w[i].get<double>();
  const auto& ms = j.at("means");
  const int d = static_cast<int>(ms.at(0).size());
  Mat means(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) means(i, k) = ms[i][k].get<double>();
  std::vector<SquareMat> covs;
  for (int i = 0; i < n; ++i) {
    SquareMat c(d, d);
    const auto& cj = j.at("covs")[i];
    for (int r = 0; r < d; ++r)
      for (int cc = 0; cc < d; ++cc) c(r, cc) = cj[r][cc].get<double>();
    covs.push_back(c);
  }
  return GaussianMixture::create(weights, means, covs);
}

void write_mixture(const std::filesystem::path& path, const GaussianMixture& g) {
  json j;
  for (int i = 0; i < g.modes(); ++i) {
    j["weights"].push_back(g.weights[i]);
    json mean = json::array();
    for (int k = 0; k < g.dim(); ++k) mean.push_back(g.means(i, k));
    j["means"].push_back(mean);
    json cov = json::array();
    for (int r = 0; r < g.dim(); ++r) {
      json row = json::array();
      for (int c = 0; c < g.dim(); ++c) row.push_back(g.covs[i](r, c));
      cov.push_back(row);
    }
    j["covs"].push_back(cov);
  }
  std::ofstream out(path);
  require(out.good(), "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void save_model(const std::filesystem::path& path, const FeatureModel& model) {
  const auto& cfg = model.fmap->config();
  json j;
  j["kind"] = cfg.kind == FeatureKind::RandomFourier ? "rff" : "rbf";
  j["count"] = cfg.count;
  j["bandwidth"] = cfg.bandwidth;
  j["tau_scale"] = cfg.tau_scale;
  j["include_bias"] = cfg.include_bias;
  j["include_linear"] = cfg.include_linear;
  j["seed"] = cfg.seed;
  j["x_dim"] = model.fmap->x_dim();
  j["tag"] = target_tag_name(model.tag);
  j["ridge_lambda"] = model.ridge_lambda;
  j["draw_seed"] = model.draw_seed;
  const std::string header = j.dump();

  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path.string());
  out.write("SIMODEL1", 8);
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_mat_payload(out, model.fmap->param_matrix());
  Mat ph(1, model.fmap->phases().size());
  ph.row(0) = model.fmap->phases().transpose();
  write_mat_payload(out, ph);
  write_mat_payload(out, model.weights);
}

FeatureModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  require(std::string(magic, 8) == "SIMODEL1", "bad model magic in " + path.string());
  const auto hlen = read_raw<std::uint32_t>(in);
  std::string header(hlen, '\0');
  in.read(header.data(), hlen);
  require(in.good(), "truncated model header");
  json j = json::parse(header);

  FeatureMapConfig cfg;
  cfg.kind = j.at("kind") == "rff" ? FeatureKind::RandomFourier : FeatureKind::RBFGrid;
  cfg.count = j.at("count").get<int>();
  cfg.bandwidth = j.at("bandwidth").get<double>();
  cfg.tau_scale = j.at("tau_scale").get<double>();
  cfg.include_bias = j.at("include_bias").get<bool>();
  cfg.include_linear = j.at("include_linear").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const int x_dim = j.at("x_dim").get<int>();

  Mat freq_t = read_mat_payload(in);
  Mat phases = read_mat_payload(in);
  Mat weights = read_mat_payload(in);

  // rebuild deterministically, then overwrite parameters with the stored ones
  Mat dummy_inputs = Mat::Zero(2, x_dim + 1);
  const Mat* inputs = cfg.kind == FeatureKind::RBFGrid ? &dummy_inputs : nullptr;
  FeatureMap fm = FeatureMap::build(cfg, x_dim, inputs);
  fm.set_params(std::move(freq_t), phases.row(0).transpose());

  FeatureModel model;
  model.fmap = std::make_shared<FeatureMap>(std::move(fm));
  model.weights = std::move(weights);
  model.ridge_lambda = j.at("ridge_lambda").get<double>();
  model.tag = parse_target_tag(j.at("tag").get<std::string>());
  model.draw_seed = j.at("draw_seed").get<std::uint64_t>();
  model.finalize();
  return model;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace si::io
