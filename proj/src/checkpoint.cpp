#include <cstring>
#include <fstream>

#include <json.hpp>

#include "tae/train.hpp"

namespace tae {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'T', 'A', 'E', 'C', 'K', 'P', '0', '1'};
constexpr int kVersion = 1;

json config_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch", c.batch},
              {"lr_pred", c.lr_pred},
              {"lr_adv", c.lr_adv},
              {"lr_disc", c.lr_disc},
              {"lr_semi", c.lr_semi},
              {"div_epochs", c.div_epochs},
              {"lambda_d", c.lambda_d},
              {"label_frac", c.label_frac},
              {"seed", c.seed},
              {"oversample_labeled", c.oversample_labeled},
              {"grad_clip", c.grad_clip}};
}

TrainConfig config_from(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs");
  c.batch = j.at("batch");
  c.lr_pred = j.at("lr_pred");
  c.lr_adv = j.at("lr_adv");
  c.lr_disc = j.at("lr_disc");
  c.lr_semi = j.at("lr_semi");
  c.div_epochs = j.at("div_epochs");
  c.lambda_d = j.at("lambda_d");
  c.label_frac = j.at("label_frac");
  c.seed = j.at("seed");
  c.oversample_labeled = j.at("oversample_labeled");
  c.grad_clip = j.at("grad_clip");
  return c;
}

json model_json(const ModelConfig& m) {
  return json{{"feat", {{"width", m.feat.width}, {"hidden", m.feat.hidden}, {"conv", m.feat.conv}}},
              {"enc_hidden", m.enc_hidden},
              {"dec_hidden", m.dec_hidden},
              {"disc_hidden", m.disc_hidden},
              {"cls_hidden", m.cls_hidden},
              {"horizon", m.horizon},
              {"prior",
               {{"class_probs", m.prior.class_probs},
                {"agg_mu", m.prior.agg_mu},
                {"agg_sigma", m.prior.agg_sigma},
                {"sigma_d", m.prior.sigma_d},
                {"K", m.prior.K}}}};
}

ModelConfig model_from(const json& j) {
  ModelConfig m;
  m.feat.width = j.at("feat").at("width");
  m.feat.hidden = j.at("feat").at("hidden");
  m.feat.conv = j.at("feat").at("conv");
  m.enc_hidden = j.at("enc_hidden");
  m.dec_hidden = j.at("dec_hidden");
  m.disc_hidden = j.at("disc_hidden");
  m.cls_hidden = j.at("cls_hidden");
  m.horizon = j.at("horizon");
  const json& p = j.at("prior");
  for (int c = 0; c < 3; ++c) m.prior.class_probs[c] = p.at("class_probs").at(c);
  m.prior.agg_mu = p.at("agg_mu");
  m.prior.agg_sigma = p.at("agg_sigma");
  m.prior.sigma_d = p.at("sigma_d");
  m.prior.K = p.at("K");
  return m;
}

json opt_json(const AdamState& o) {
  std::vector<std::string> entries;
  for (const auto& [name, m] : o.m) entries.push_back(name);
  return json{{"lr", o.cfg.lr},
              {"beta1", o.cfg.beta1},
              {"beta2", o.cfg.beta2},
              {"eps", o.cfg.eps},
              {"step", o.step},
              {"entries", entries}};
}

void write_floats(std::ofstream& f, const std::vector<float>& v) {
  f.write(reinterpret_cast<const char*>(v.data()),
          std::streamsize(v.size() * sizeof(float)));
}

struct Reader {
  std::ifstream f;
  std::string where;
  explicit Reader(const std::string& path) : f(path, std::ios::binary), where(path) {
    check_data(f.good(), "checkpoint '" + path + "': cannot open");
  }
  void raw(void* dst, size_t n) {
    f.read(reinterpret_cast<char*>(dst), std::streamsize(n));
    check_data(size_t(f.gcount()) == n, "checkpoint '" + where + "': truncated file");
  }
  std::vector<float> floats(size_t n) {
    std::vector<float> v(n);
    raw(v.data(), n * sizeof(float));
    return v;
  }
};

const AdamState* opt_list(const Checkpoint& ck, int i) {
  const AdamState* opts[5] = {&ck.opt_pred, &ck.opt_adv, &ck.opt_disc, &ck.opt_semi, &ck.opt_cls};
  return opts[i];
}
AdamState* opt_list(Checkpoint& ck, int i) {
  AdamState* opts[5] = {&ck.opt_pred, &ck.opt_adv, &ck.opt_disc, &ck.opt_semi, &ck.opt_cls};
  return opts[i];
}
const char* kOptNames[5] = {"pred", "adv", "disc", "semi", "cls"};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  json header;
  header["version"] = kVersion;
  header["epoch"] = ck.epoch;
  header["div_epoch"] = ck.div_epoch;
  header["rng"] = {{"key", ck.rng_key}, {"counter", ck.rng_counter}};
  header["train"] = config_json(ck.train);
  header["model"] = model_json(ck.model);
  json params = json::array();
  for (const auto& [name, a] : ck.params) params.push_back({{"name", name}, {"shape", a.shape}});
  header["params"] = params;
  for (int i = 0; i < 5; ++i) header["opt"][kOptNames[i]] = opt_json(*opt_list(ck, i));

  std::string hs = header.dump();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  check_data(f.good(), "checkpoint '" + path + "': cannot open for writing");
  f.write(kMagic, sizeof(kMagic));
  uint32_t hlen = uint32_t(hs.size());
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(hs.data(), std::streamsize(hs.size()));
  for (const auto& [name, a] : ck.params) write_floats(f, a.v);
  for (int i = 0; i < 5; ++i) {
    const AdamState& o = *opt_list(ck, i);
    for (const auto& [name, m] : o.m) {
      write_floats(f, m);
      write_floats(f, o.v.at(name));
    }
  }
  f.flush();
  check_data(f.good(), "checkpoint '" + path + "': write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.raw(magic, sizeof(magic));
  check_data(std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
             "checkpoint '" + path + "': bad magic");
  uint32_t hlen = 0;
  r.raw(&hlen, sizeof(hlen));
  check_data(hlen > 0 && hlen < (64u << 20), "checkpoint '" + path + "': absurd header length");
  std::string hs(hlen, '\0');
  r.raw(hs.data(), hlen);
  json header;
  try {
    header = json::parse(hs);
  } catch (const json::exception& e) {
    throw DataError("checkpoint '" + path + "': header parse error: " + e.what());
  }
  try {
    int version = header.at("version");
    check_data(version == kVersion, "checkpoint '" + path + "': unknown version " +
                                        std::to_string(version) + " (expected " +
                                        std::to_string(kVersion) + ")");
    Checkpoint ck;
    ck.epoch = header.at("epoch");
    ck.div_epoch = header.at("div_epoch");
    ck.rng_key = header.at("rng").at("key");
    ck.rng_counter = header.at("rng").at("counter");
    ck.train = config_from(header.at("train"));
    ck.model = model_from(header.at("model"));
    for (const json& p : header.at("params")) {
      std::vector<int> shape = p.at("shape");
      std::string name = p.at("name");
      ck.params.add(name, Array::checked(shape, r.floats(size_t(Array::count(shape))),
                                         "checkpoint param " + name));
    }
    for (int i = 0; i < 5; ++i) {
      AdamState& o = *opt_list(ck, i);
      const json& oj = header.at("opt").at(kOptNames[i]);
      o.cfg.lr = oj.at("lr");
      o.cfg.beta1 = oj.at("beta1");
      o.cfg.beta2 = oj.at("beta2");
      o.cfg.eps = oj.at("eps");
      o.step = oj.at("step");
      for (const std::string name : oj.at("entries")) {
        size_t n = ck.params.get(name).v.size();
        o.m[name] = r.floats(n);
        o.v[name] = r.floats(n);
      }
    }
    r.f.peek();
    check_data(r.f.eof(), "checkpoint '" + path + "': trailing bytes after payload");
    return ck;
  } catch (const json::exception& e) {
    throw DataError("checkpoint '" + path + "': malformed header: " + e.what());
  }
}

void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  check_data(f.good(), "loss csv '" + path + "': cannot open for writing");
  f << "epoch,batch,phase,loss\n";
  for (const auto& row : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", row.loss);
    f << row.epoch << ',' << row.batch << ',' << row.phase << ',' << buf << '\n';
  }
  check_data(f.good(), "loss csv '" + path + "': write failed");
}

}  // namespace tae
