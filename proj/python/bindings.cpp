#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "psjnet/data/sequence_io.hpp"
#include "psjnet/data/synthetic.hpp"
#include "psjnet/error.hpp"
#include "psjnet/eval/evaluate.hpp"
#include "psjnet/eval/metrics.hpp"
#include "psjnet/eval/significance.hpp"
#include "psjnet/model/checkpoint.hpp"
#include "psjnet/model/network.hpp"
#include "psjnet/parallel.hpp"
#include "psjnet/trainer/init.hpp"
#include "psjnet/trainer/train.hpp"

namespace py = pybind11;
using namespace psjnet;

namespace {

Domain parse_domain(const std::string& d) {
  if (d == "A") return Domain::kA;
  if (d == "B") return Domain::kB;
  throw ConfigError("domain must be 'A' or 'B'");
}

LossMode parse_mode(const std::string& m) {
  if (m == "joint") return LossMode::kJoint;
  if (m == "A") return LossMode::kAOnly;
  if (m == "B") return LossMode::kBOnly;
  throw ConfigError("loss mode must be 'joint', 'A' or 'B'");
}

std::vector<MixedSequence> parse_lines(const std::vector<std::string>& lines) {
  std::vector<MixedSequence> out;
  out.reserve(lines.size());
  for (const std::string& l : lines) out.push_back(parse_sequence_line(l));
  return out;
}

std::vector<std::string> to_lines(const std::vector<MixedSequence>& seqs) {
  std::vector<std::string> out;
  for (const MixedSequence& s : seqs) out.push_back(serialize_sequence(s));
  return out;
}

py::dict report_dict(const EvalReport& r) {
  py::dict out;
  for (Domain d : kDomains) {
    py::dict dom;
    dom["cases"] = r.at(d).cases();
    dom["skipped_oov_truth"] = r.at(d).skipped_oov_truth;
    for (std::size_t k : r.cutoffs) {
      dom[py::str("recall@" + std::to_string(k))] = r.at(d).recall(k);
      dom[py::str("mrr@" + std::to_string(k))] = r.at(d).mrr(k);
    }
    out[py::str(std::string(1, domain_char(d)))] = dom;
  }
  return out;
}

// A checkpoint: parameters plus the vocabularies that index them.
struct Model {
  Checkpoint ckpt;

  MixedSequence encode_line(const std::string& line) const {
    return encode(parse_sequence_line(line), ckpt.vocab_a, ckpt.vocab_b);
  }
};

Model make_model(const std::string& variant, std::size_t k, std::size_t hidden,
                 std::vector<ItemId> vocab_a, std::vector<ItemId> vocab_b, std::uint64_t seed,
                 const std::string& ablation) {
  Model m;
  m.ckpt.vocab_a = Vocabulary(Domain::kA, std::move(vocab_a));
  m.ckpt.vocab_b = Vocabulary(Domain::kB, std::move(vocab_b));
  ModelConfig c;
  c.variant = parse_variant(variant);
  c.ablation = parse_ablation(ablation);
  c.roles = k;
  c.hidden = hidden;
  c.vocab_a = m.ckpt.vocab_a.size();
  c.vocab_b = m.ckpt.vocab_b.size();
  m.ckpt.params = init_params(c, seed);
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core of the psjnet package";
  py::register_exception<Error>(m, "PsjnetError", PyExc_RuntimeError);

  m.def("parse_sequence_line", [](const std::string& line) {
    std::vector<std::pair<std::string, ItemId>> out;
    const MixedSequence seq = parse_sequence_line(line);
    for (const Event& e : seq.events()) {
      out.emplace_back(std::string(1, domain_char(e.domain)), e.item);
    }
    return out;
  }, py::arg("line"), "Parse one sequence line into (domain, item id) pairs.");
  m.def("serialize_sequence", [](const std::vector<std::pair<std::string, ItemId>>& events) {
    std::vector<Event> evs;
    for (const auto& [d, id] : events) evs.push_back({parse_domain(d), id});
    return serialize_sequence(MixedSequence(std::move(evs)));
  }, py::arg("events"));

  m.def("rank_of", [](const std::vector<double>& s, std::size_t t) { return rank_of(s, t); },
        py::arg("scores"), py::arg("truth"));
  m.def("recall_at_k", [](const std::vector<double>& s, std::size_t t, std::size_t k) {
    return recall_at_k(s, t, k);
  }, py::arg("scores"), py::arg("truth"), py::arg("k"));
  m.def("mrr_at_k", [](const std::vector<double>& s, std::size_t t, std::size_t k) {
    return mrr_at_k(s, t, k);
  }, py::arg("scores"), py::arg("truth"), py::arg("k"));
  m.def("paired_t_test", [](const std::vector<double>& x, const std::vector<double>& y) {
    const TTestResult r = paired_t_test(x, y);
    py::dict out;
    out["t"] = r.t;
    out["p"] = r.p;
    out["df"] = r.df;
    out["significant"] = r.significant;
    return out;
  }, py::arg("x"), py::arg("y"), "Two-sided paired t-test.");

  m.def("make_synthetic_benchmark",
        [](std::size_t accounts, std::size_t sequences_per_account, double signal, std::uint64_t seed) {
          SynthConfig c;
          c.accounts = accounts;
          c.sequences_per_account = sequences_per_account;
          c.signal = signal;
          c.seed = seed;
          const SynthDataset ds = make_synthetic_benchmark(c);
          py::dict out;
          out["train"] = to_lines(ds.splits.train);
          out["valid"] = to_lines(ds.splits.valid);
          out["test"] = to_lines(ds.splits.test);
          return out;
        },
        py::arg("accounts") = 64, py::arg("sequences_per_account") = 8, py::arg("signal") = 1.0,
        py::arg("seed") = 7, "Planted-role benchmark as sequence lines per split.");

  py::class_<Model>(m, "Model")
      .def(py::init(&make_model), py::arg("variant") = "psjnet2", py::arg("k") = 4,
           py::arg("hidden") = 90, py::arg("vocab_a"), py::arg("vocab_b"), py::arg("seed") = 1,
           py::arg("ablation") = "none", "Freshly initialised model over the given item ids.")
      .def_property_readonly("config", [](const Model& self) {
        return config_to_json(self.ckpt.params.config).dump();
      })
      .def("param_names", [](const Model& self) { return self.ckpt.params.tensors.names(); })
      .def("param", [](const Model& self, const std::string& name) {
        return self.ckpt.params.tensors.at(name).storage();
      }, py::arg("name"))
      .def("loss", [](const Model& self, const std::string& line, const std::string& mode) {
        return sequence_loss_value(self.ckpt.params, self.encode_line(line), parse_mode(mode));
      }, py::arg("line"), py::arg("mode") = "joint", "Teacher-forced NLL of one sequence.")
      .def("predict", [](const Model& self, const std::string& line, const std::string& domain) {
        const MixedSequence s = self.encode_line(line);
        return next_item_distribution(self.ckpt.params, s, parse_domain(domain), s.size()).storage();
      }, py::arg("line"), py::arg("domain"), "Next-item distribution after the whole sequence.")
      .def("recommend", [](const Model& self, const std::string& line, const std::string& domain,
                           std::size_t k) {
        const MixedSequence s = self.encode_line(line);
        const Domain d = parse_domain(domain);
        const nk::Tensor p = next_item_distribution(self.ckpt.params, s, d, s.size());
        std::vector<std::pair<ItemId, double>> out;
        for (const auto& [idx, score] : top_k(p.data(), k)) out.emplace_back(self.ckpt.vocab(d).id(idx), score);
        return out;
      }, py::arg("line"), py::arg("domain"), py::arg("k") = 10)
      .def("evaluate", [](const Model& self, const std::vector<std::string>& lines,
                          std::vector<std::size_t> cutoffs) {
        return report_dict(evaluate_checkpoint(self.ckpt, parse_lines(lines), cutoffs, worker_count()));
      }, py::arg("lines"), py::arg("cutoffs") = std::vector<std::size_t>{5, 10, 20})
      .def("to_bytes", [](const Model& self) { return py::bytes(serialize_checkpoint(self.ckpt)); })
      .def_static("from_bytes", [](const py::bytes& b) { return Model{parse_checkpoint(std::string(b))}; })
      .def("save", [](const Model& self, const std::string& path) { save_checkpoint(path, self.ckpt); },
           py::arg("path"))
      .def_static("load", [](const std::string& path) { return Model{load_checkpoint(path)}; },
                  py::arg("path"));

  m.def("train",
        [](const std::vector<std::string>& train_lines, const std::vector<std::string>& valid_lines,
           const std::string& variant, std::size_t k, std::size_t hidden, double keep_prob, double lr,
           std::size_t batch, std::size_t epochs, std::size_t patience, std::uint64_t seed,
           const std::string& ablation) {
          TrainConfig c;
          c.model.variant = parse_variant(variant);
          c.model.ablation = parse_ablation(ablation);
          c.model.roles = k;
          c.model.hidden = hidden;
          c.keep_prob = keep_prob;
          c.adam.lr = lr;
          c.batch = batch;
          c.epochs = epochs;
          c.patience = patience;
          c.seed = seed;
          const auto tr = parse_lines(train_lines);
          const auto va = parse_lines(valid_lines);
          TrainResult r;
          {
            py::gil_scoped_release release;
            r = train(tr, va, c);
          }
          py::list history;
          for (const EpochRecord& e : r.history) {
            py::dict row;
            row["epoch"] = e.epoch;
            row["train_loss"] = e.train_loss;
            row["val_mrr20_A"] = e.val_mrr20_a;
            row["val_mrr20_B"] = e.val_mrr20_b;
            row["wall_seconds"] = e.wall_seconds;
            history.append(row);
          }
          return py::make_tuple(Model{r.best}, history);
        },
        py::arg("train_lines"), py::arg("valid_lines") = std::vector<std::string>{},
        py::arg("variant") = "psjnet2", py::arg("k") = 4, py::arg("hidden") = 90,
        py::arg("keep_prob") = 0.8, py::arg("lr") = 0.001, py::arg("batch") = 64,
        py::arg("epochs") = 30, py::arg("patience") = 5, py::arg("seed") = 1,
        py::arg("ablation") = "none", "Train a model; returns (best model, history rows).");
}
