#include "lily/estimator/checkpoint.hpp"

#include "lily/error.hpp"
#include "lily/io.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace lily::estimator {
namespace {

using json = nlohmann::json;

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json model_json(const ModelConfig& c) {
  return {{"obs_dim", c.obs_dim},
          {"lag", c.lag},
          {"partition", {c.partition.fixed, c.partition.changing, c.partition.obs}},
          {"theta_dyn_dim", c.theta_dyn_dim},
          {"theta_obs_dim", c.theta_obs_dim},
          {"num_segments", c.num_segments},
          {"encoder_hidden", c.encoder_hidden},
          {"encoder_layers", c.encoder_layers},
          {"decoder_hidden", c.decoder_hidden},
          {"decoder_layers", c.decoder_layers},
          {"prior_hidden", c.prior_hidden},
          {"prior_layers", c.prior_layers}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig c;
  c.obs_dim = j.at("obs_dim").get<int>();
  c.lag = j.at("lag").get<int>();
  const auto p = j.at("partition").get<std::vector<int>>();
  if (p.size() != 3) throw InvalidInput("partition must have three entries");
  c.partition = {p[0], p[1], p[2]};
  c.theta_dyn_dim = j.at("theta_dyn_dim").get<int>();
  c.theta_obs_dim = j.at("theta_obs_dim").get<int>();
  c.num_segments = j.at("num_segments").get<int>();
  c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
  c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
  c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
  c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
  c.prior_hidden = j.value("prior_hidden", c.prior_hidden);
  c.prior_layers = j.value("prior_layers", c.prior_layers);
  return c;
}

json cfg_json(const TrainConfig& c) {
  return {{"beta", c.beta},
          {"gamma", c.gamma},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"batch", c.batch},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"lag", c.lag},
          {"latent_dim", c.latent_dim},
          {"theta_dims", {c.theta_dyn_dim, c.theta_obs_dim}},
          {"seed", c.seed},
          {"val_fraction", c.val_fraction},
          {"track_mcc", c.track_mcc}};
}

TrainConfig cfg_from_json(const json& j) {
  TrainConfig c;
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch = j.value("batch", c.batch);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.lag = j.value("lag", c.lag);
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  if (j.contains("theta_dims")) {
    const auto d = j.at("theta_dims").get<std::vector<int>>();
    if (d.size() != 2) throw InvalidInput("theta_dims must have two entries");
    c.theta_dyn_dim = d[0];
    c.theta_obs_dim = d[1];
  }
  c.seed = j.value("seed", c.seed);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  c.track_mcc = j.value("track_mcc", c.track_mcc);
  return c;
}

std::string number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string train_config_to_json(const TrainConfig& cfg) { return cfg_json(cfg).dump(2); }

TrainConfig train_config_from_json(const std::string& text) {
  TrainConfig c;
  try {
    c = cfg_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("train config: ") + e.what());
  }
  validate(c);
  return c;
}

std::string history_to_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_elbo,val_elbo,mcc_if_available\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + number(r.train_elbo) + "," + number(r.val_elbo) + "," + number(r.mcc) + "\n";
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params, const TrainConfig& cfg,
                     const std::vector<EpochRecord>& history) {
  validate(params);
  std::filesystem::create_directories(dir);
  io::write_f64(dir / "params.bin", std::span<const double>(params.values.data(), params.values.size()));
  json layout = json::array();
  for (const auto& b : params.layout.blocks) {
    layout.push_back({{"name", b.name}, {"offset", b.offset}, {"rows", b.rows}, {"cols", b.cols}});
  }
  const json meta{{"format_version", kCheckpointFormatVersion},
                  {"model", model_json(params.config)},
                  {"x_mean", to_std(params.x_mean)},
                  {"x_scale", to_std(params.x_scale)},
                  {"size", params.layout.size},
                  {"layout", layout}};
  io::write_text(dir / "params.json", meta.dump(2) + "\n");
  io::write_text(dir / "cfg.json", cfg_json(cfg).dump(2) + "\n");
  io::write_text(dir / "history.csv", history_to_csv(history));
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  using Kind = LoadError::Kind;
  Checkpoint ck;
  json meta;
  try {
    meta = json::parse(io::read_text(dir / "params.json"));
  } catch (const json::exception& e) {
    throw LoadError(Kind::kMalformedHeader, std::string("params.json: ") + e.what());
  }
  if (!meta.is_object() || !meta.contains("format_version") || !meta["format_version"].is_number_integer()) {
    throw LoadError(Kind::kMalformedHeader, "params.json: missing format_version");
  }
  if (meta["format_version"].get<int>() != kCheckpointFormatVersion) {
    throw LoadError(Kind::kUnsupportedVersion, "params.json: unsupported format_version");
  }
  try {
    ck.params.config = model_from_json(meta.at("model"));
    ck.params.layout = make_layout(ck.params.config);
    const auto mean = meta.at("x_mean").get<std::vector<double>>();
    const auto scale = meta.at("x_scale").get<std::vector<double>>();
    ck.params.x_mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    ck.params.x_scale = Eigen::Map<const Vector>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    if (meta.at("size").get<std::size_t>() != ck.params.layout.size) {
      throw LoadError(Kind::kSizeMismatch, "params.json: size does not match the model config");
    }
    const auto& layout = meta.at("layout");
    if (layout.size() != ck.params.layout.blocks.size()) {
      throw LoadError(Kind::kSizeMismatch, "params.json: layout manifest does not match the model config");
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& b = ck.params.layout.blocks[i];
      if (layout[i].at("name").get<std::string>() != b.name || layout[i].at("offset").get<std::size_t>() != b.offset ||
          layout[i].at("rows").get<int>() != b.rows || layout[i].at("cols").get<int>() != b.cols) {
        throw LoadError(Kind::kSizeMismatch, "params.json: layout entry " + b.name + " does not match");
      }
    }
    ck.cfg = cfg_from_json(json::parse(io::read_text(dir / "cfg.json")));
  } catch (const json::exception& e) {
    throw LoadError(Kind::kMalformedHeader, std::string("checkpoint: ") + e.what());
  } catch (const InvalidInput& e) {
    throw LoadError(Kind::kMalformedHeader, std::string("checkpoint: ") + e.what());
  }
  const auto values = io::read_f64(dir / "params.bin", ck.params.layout.size);
  ck.params.values = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  try {
    validate(ck.params);
  } catch (const InvalidInput& e) {
    throw LoadError(Kind::kMalformedHeader, std::string("checkpoint: ") + e.what());
  }
  if (std::filesystem::exists(dir / "history.csv")) {
    std::istringstream in(io::read_text(dir / "history.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(row, cell, ',')) cells.push_back(cell);
      if (cells.size() < 3) throw LoadError(Kind::kMalformedHeader, "history.csv: short row");
      EpochRecord r;
      try {
        r.epoch = std::stoi(cells[0]);
        r.train_elbo = std::stod(cells[1]);
        r.val_elbo = std::stod(cells[2]);
        if (cells.size() > 3 && !cells[3].empty()) r.mcc = std::stod(cells[3]);
      } catch (const std::exception&) {
        throw LoadError(Kind::kMalformedHeader, "history.csv: bad number");
      }
      ck.history.push_back(r);
    }
  }
  return ck;
}

}  // namespace lily::estimator
