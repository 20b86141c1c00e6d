#include "mopinn/mopinn.h"

#include "core/errors.hpp"
#include "core/experiment.hpp"
#include "core/posterior.hpp"
#include "core/text.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

int guard(const std::function<void()>& body) {
  try {
    body();
    return MOPINN_OK;
  } catch (const mopinn::NumericalError& e) {
    set_error(e.what());
    return MOPINN_ERR_NUMERIC;
  } catch (const std::exception& e) {
    set_error(e.what());
    return MOPINN_ERR_CONFIG;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct mopinn_experiment {
  mopinn::ExperimentConfig cfg;
};

extern "C" {

mopinn_experiment* mopinn_experiment_create(const char* experiment_id) {
  if (experiment_id == nullptr) {
    set_error("experiment id is null");
    return nullptr;
  }
  auto* exp = new mopinn_experiment;
  exp->cfg.experiment = experiment_id;
  try {
    exp->cfg.validate();
  } catch (const std::exception& e) {
    set_error(e.what());
    delete exp;
    return nullptr;
  }
  return exp;
}

void mopinn_experiment_destroy(mopinn_experiment* exp) { delete exp; }

int mopinn_experiment_set(mopinn_experiment* exp, const char* key,
                          const char* value) {
  if (exp == nullptr || key == nullptr || value == nullptr) {
    set_error("null argument");
    return MOPINN_ERR_CONFIG;
  }
  return guard([&] {
    const std::string k(key), v(value);
    auto& cfg = exp->cfg;
    const auto as_long = [&v, &k]() {
      std::size_t pos = 0;
      long out = 0;
      try {
        out = std::stol(v, &pos);
      } catch (const std::exception&) {
        throw mopinn::ConfigError("bad value for " + k + ": " + v);
      }
      if (pos != v.size())
        throw mopinn::ConfigError("bad value for " + k + ": " + v);
      return out;
    };
    if (k == "noise") {
      if (v == "case1")
        cfg.noise_case = 1;
      else if (v == "case2")
        cfg.noise_case = 2;
      else
        throw mopinn::ConfigError("noise must be case1 or case2");
    } else if (k == "seed") {
      cfg.seed = static_cast<std::uint64_t>(as_long());
    } else if (k == "init_seed") {
      cfg.init_seed = static_cast<std::uint64_t>(as_long());
    } else if (k == "outputs") {
      cfg.outputs = static_cast<int>(as_long());
    } else if (k == "epochs") {
      cfg.epochs = static_cast<int>(as_long());
    } else if (k == "ensemble") {
      cfg.ensemble_size = static_cast<int>(as_long());
    } else if (k == "deterministic") {
      cfg.deterministic = as_long() != 0;
    } else if (k == "paper_scale") {
      cfg.paper_scale = as_long() != 0;
    } else if (k == "out") {
      cfg.out_dir = v;
    } else if (k == "prior") {
      cfg.prior_file = v;
    } else {
      throw mopinn::ConfigError("unknown config key: " + k);
    }
    cfg.validate();
  });
}

int mopinn_experiment_run(mopinn_experiment* exp, char** manifest_json) {
  if (exp == nullptr) {
    set_error("null experiment handle");
    return MOPINN_ERR_CONFIG;
  }
  return guard([&] {
    const nlohmann::json manifest = mopinn::run_experiment(exp->cfg);
    if (manifest_json != nullptr) *manifest_json = dup_string(manifest.dump(2));
  });
}

int mopinn_qq_files(const char* ensemble_csv_a, const char* ensemble_csv_b,
                    const char* out_csv) {
  if (ensemble_csv_a == nullptr || ensemble_csv_b == nullptr ||
      out_csv == nullptr) {
    set_error("null argument");
    return MOPINN_ERR_CONFIG;
  }
  return guard([&] {
    using namespace mopinn;
    std::ifstream ia(ensemble_csv_a), ib(ensemble_csv_b);
    if (!ia) throw ConfigError(std::string("cannot read ") + ensemble_csv_a);
    if (!ib) throw ConfigError(std::string("cannot read ") + ensemble_csv_b);
    const PosteriorField a = read_ensemble_csv(ia);
    const PosteriorField b = read_ensemble_csv(ib);
    std::ofstream os(out_csv);
    if (!os) throw ConfigError(std::string("cannot write ") + out_csv);
    const auto fractions = default_qq_fractions();
    os << "x,fraction,q_a,q_b\n";
    bool any = false;
    for (std::size_t i = 0; i < a.eval_points.size(); ++i) {
      for (std::size_t j = 0; j < b.eval_points.size(); ++j) {
        if (std::abs(a.eval_points[i].x - b.eval_points[j].x) > 1e-9 ||
            std::abs(a.eval_points[i].y - b.eval_points[j].y) > 1e-9)
          continue;
        const auto pairs = qq_points(a.ensemble.row(i).transpose(),
                                     b.ensemble.row(j).transpose(), fractions);
        for (std::size_t q = 0; q < pairs.size(); ++q)
          os << fmt_g17(a.eval_points[i].x) << ',' << fmt_g17(fractions[q])
             << ',' << fmt_g17(pairs[q].first) << ','
             << fmt_g17(pairs[q].second) << '\n';
        any = true;
        break;
      }
    }
    if (!any)
      throw ConfigError("the two ensembles share no evaluation points");
  });
}

const char* mopinn_last_error(void) { return g_last_error.c_str(); }

void mopinn_free(char* ptr) { std::free(ptr); }

const char* mopinn_version(void) { return "0.1.0"; }

}  // extern "C"
