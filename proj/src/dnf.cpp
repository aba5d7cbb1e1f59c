#include "hawk/dnf.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hawk/errors.hpp"
#include "hawk/util.hpp"

namespace hawk::dnf {

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

// out(i) = product of v excluding index i, via prefix/suffix scans so a
// single zero factor does not poison every entry.
void exclusive_products(const Eigen::Ref<const Eigen::RowVectorXd>& v,
                        Eigen::RowVectorXd& out) {
  const auto n = v.size();
  out.resize(n);
  double prefix = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = prefix;
    prefix *= v(i);
  }
  double suffix = 1.0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    out(i) *= suffix;
    suffix *= v(i);
  }
}

}  // namespace

double truth_from_logits(double v_yes, double v_no) {
  if (!std::isfinite(v_yes) || !std::isfinite(v_no))
    throw Error(ErrorCode::non_finite_input, "yes/no logits must be finite");
  return 2.0 * sigmoid(v_yes - v_no) - 1.0;
}

double truth_from_samples(int m_yes, int m_no) {
  if (m_yes < 0 || m_no < 0 || m_yes + m_no < 1)
    throw Error(ErrorCode::no_samples, "need at least one parsed sample");
  return 2.0 * static_cast<double>(m_yes) / (m_yes + m_no) - 1.0;
}

AtomTruth::AtomTruth(int predicate, int atom, double value)
    : predicate_index(predicate), atom_index(atom) {
  if (!std::isfinite(value))
    throw Error(ErrorCode::non_finite_input, "atom truth must be finite");
  mu = std::clamp(value, -1.0, 1.0);
}

// --- model -------------------------------------------------------------------

DnfModel::DnfModel(int n_atoms, int n_clauses, int n_labels)
    : n_atoms_(n_atoms), n_clauses_(n_clauses), n_labels_(n_labels) {
  if (n_atoms < 1 || n_clauses < 1 || n_labels < 1)
    throw Error(ErrorCode::dimension_mismatch, "model dimensions must be positive");
  conj_raw_ = MatrixXd::Constant(n_clauses, 2 * n_atoms, -kHardRaw);
  disj_raw_ = MatrixXd::Constant(n_labels, n_clauses, -kHardRaw);
}

DnfModel DnfModel::init(int n_atoms, int n_clauses, int n_labels, std::uint64_t seed) {
  DnfModel m(n_atoms, n_clauses, n_labels);
  m.seed_ = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> low_gate(-2.2, -1.8);
  for (int c = 0; c < n_clauses; ++c)
    for (int l = 0; l < 2 * n_atoms; ++l) m.conj_raw_(c, l) = low_gate(rng);
  for (int y = 0; y < n_labels; ++y)
    for (int c = 0; c < n_clauses; ++c) m.disj_raw_(y, c) = low_gate(rng);
  m.alpha_ = 5.0;
  return m;
}

MatrixXd DnfModel::conj_gates() const {
  return conj_raw_.unaryExpr([](double t) { return sigmoid(t); });
}

MatrixXd DnfModel::disj_gates() const {
  return disj_raw_.unaryExpr([](double t) { return sigmoid(t); });
}

void DnfModel::clear_gates() {
  conj_raw_.setConstant(-kHardRaw);
  disj_raw_.setConstant(-kHardRaw);
}

void DnfModel::set_conj_literal(int clause, int atom, bool negated, bool on) {
  int column = atom + (negated ? n_atoms_ : 0);
  conj_raw_(clause, column) = on ? kHardRaw : -kHardRaw;
}

void DnfModel::set_disj_clause(int label, int clause, bool on) {
  disj_raw_(label, clause) = on ? kHardRaw : -kHardRaw;
}

void DnfModel::forward(const VectorXd& atoms, Workspace& ws) const {
  if (atoms.size() != n_atoms_)
    throw Error(ErrorCode::dimension_mismatch,
                "expected " + std::to_string(n_atoms_) + " atoms, got " +
                    std::to_string(atoms.size()));

  const int a2 = 2 * n_atoms_;
  ws.lit.resize(a2);
  ws.lit.head(n_atoms_) = ((atoms.array() + 1.0) / 2.0).cwiseMax(0.0).cwiseMin(1.0);
  ws.lit.tail(n_atoms_) = 1.0 - ws.lit.head(n_atoms_).array();

  ws.g = conj_gates();
  // t(c,l) = 1 - g(c,l) * (1 - lit(l)): an open gate passes the literal
  // through the product, a closed gate contributes the neutral 1.
  ws.t = (1.0 - (ws.g.array().rowwise() * (1.0 - ws.lit.transpose().array()))).matrix();
  ws.conj = ws.t.rowwise().prod();

  ws.h = disj_gates();
  ws.u = (1.0 - (ws.h.array().rowwise() * ws.conj.transpose().array())).matrix();
  ws.s = 1.0 - ws.u.rowwise().prod().array();

  VectorXd scaled = alpha_ * ws.s;
  double peak = scaled.maxCoeff();
  ws.z = (scaled.array() - peak).exp();
  ws.z /= ws.z.sum();
}

LabelScores DnfModel::forward(const VectorXd& atoms) const {
  Workspace ws;
  forward(atoms, ws);
  return {ws.s, ws.z};
}

json DnfModel::to_json() const {
  std::vector<double> conj_flat(static_cast<std::size_t>(conj_raw_.size()));
  std::vector<double> disj_flat(static_cast<std::size_t>(disj_raw_.size()));
  for (int c = 0; c < n_clauses_; ++c)
    for (int l = 0; l < 2 * n_atoms_; ++l)
      conj_flat[static_cast<std::size_t>(c * 2 * n_atoms_ + l)] = conj_raw_(c, l);
  for (int y = 0; y < n_labels_; ++y)
    for (int c = 0; c < n_clauses_; ++c)
      disj_flat[static_cast<std::size_t>(y * n_clauses_ + c)] = disj_raw_(y, c);
  return json{{"schema_version", 1},
              {"n_atoms", n_atoms_},
              {"n_clauses", n_clauses_},
              {"n_labels", n_labels_},
              {"alpha", alpha_},
              {"conj_weights", conj_flat},
              {"disj_weights", disj_flat},
              {"seed", seed_}};
}

DnfModel DnfModel::from_json(const json& doc) {
  if (doc.value("schema_version", 0) != 1)
    throw Error(ErrorCode::schema_error, "unsupported model schema_version");
  DnfModel m(doc.at("n_atoms").get<int>(), doc.at("n_clauses").get<int>(),
             doc.at("n_labels").get<int>());
  m.alpha_ = doc.at("alpha").get<double>();
  m.seed_ = doc.value("seed", std::uint64_t{0});
  auto conj_flat = doc.at("conj_weights").get<std::vector<double>>();
  auto disj_flat = doc.at("disj_weights").get<std::vector<double>>();
  if (conj_flat.size() != static_cast<std::size_t>(m.conj_raw_.size()) ||
      disj_flat.size() != static_cast<std::size_t>(m.disj_raw_.size()))
    throw Error(ErrorCode::dimension_mismatch, "weight array sizes do not match dimensions");
  for (int c = 0; c < m.n_clauses_; ++c)
    for (int l = 0; l < 2 * m.n_atoms_; ++l)
      m.conj_raw_(c, l) = conj_flat[static_cast<std::size_t>(c * 2 * m.n_atoms_ + l)];
  for (int y = 0; y < m.n_labels_; ++y)
    for (int c = 0; c < m.n_clauses_; ++c)
      m.disj_raw_(y, c) = disj_flat[static_cast<std::size_t>(y * m.n_clauses_ + c)];
  return m;
}

void DnfModel::save(const std::filesystem::path& path) const {
  util::write_file(path, to_json().dump(2));
}

DnfModel DnfModel::load(const std::filesystem::path& path) {
  return from_json(json::parse(util::read_file(path)));
}

// --- loss & gradient -----------------------------------------------------------

double loss(const LabelScores& scores, int label) {
  if (label < 0 || label >= scores.z.size())
    throw Error(ErrorCode::dimension_mismatch, "label out of range");
  return -std::log(scores.z(label));
}

Gradient backward(const DnfModel& model, const VectorXd& atoms, int label) {
  if (label < 0 || label >= model.n_labels())
    throw Error(ErrorCode::dimension_mismatch, "label out of range");

  DnfModel::Workspace ws;
  model.forward(atoms, ws);

  const int C = model.n_clauses();
  const int Y = model.n_labels();
  const int L = 2 * model.n_atoms();

  Gradient grad;
  grad.conj_raw = MatrixXd::Zero(C, L);
  grad.disj_raw = MatrixXd::Zero(Y, C);

  // dL/ds_y = alpha * (z_y - 1[y=label]); dL/dalpha = (z - onehot) . s
  VectorXd dz = ws.z;
  dz(label) -= 1.0;
  VectorXd ds = model.alpha() * dz;
  grad.alpha = dz.dot(ws.s);

  // Through the disjunction: s_y = 1 - prod_c u(y,c), u = 1 - h*conj.
  VectorXd dconj = VectorXd::Zero(C);
  Eigen::RowVectorXd excl;
  for (int y = 0; y < Y; ++y) {
    exclusive_products(ws.u.row(y), excl);
    for (int c = 0; c < C; ++c) {
      double common = ds(y) * excl(c);
      grad.disj_raw(y, c) = common * ws.conj(c);
      dconj(c) += common * ws.h(y, c);
    }
  }

  // Through the conjunction: conj_c = prod_l t(c,l), t = 1 - g*(1-lit).
  for (int c = 0; c < C; ++c) {
    exclusive_products(ws.t.row(c), excl);
    for (int l = 0; l < L; ++l)
      grad.conj_raw(c, l) = dconj(c) * excl(l) * -(1.0 - ws.lit(l));
  }

  // Chain through the sigmoid gates onto the raw parameters.
  grad.conj_raw.array() *= ws.g.array() * (1.0 - ws.g.array());
  grad.disj_raw.array() *= ws.h.array() * (1.0 - ws.h.array());
  return grad;
}

// --- training -------------------------------------------------------------------

TrainResult train(const std::vector<TrainingExample>& dataset, int n_clauses, int n_labels,
                  const TrainOptions& options) {
  if (dataset.empty()) throw Error(ErrorCode::empty_dataset, "no training examples");
  const auto n_atoms = dataset.front().atoms.size();
  for (const auto& ex : dataset) {
    if (ex.atoms.size() != n_atoms)
      throw Error(ErrorCode::dimension_mismatch, "inconsistent atom vector lengths");
    if (ex.label < 0 || ex.label >= n_labels)
      throw Error(ErrorCode::dimension_mismatch, "label out of range");
  }

  TrainResult result;
  result.model = DnfModel::init(static_cast<int>(n_atoms), n_clauses, n_labels, options.seed);
  DnfModel& m = result.model;

  // Descends the total cross-entropy over the batch (the summed loss form).
  DnfModel::Workspace ws;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    MatrixXd conj_acc = MatrixXd::Zero(n_clauses, 2 * static_cast<int>(n_atoms));
    MatrixXd disj_acc = MatrixXd::Zero(n_labels, n_clauses);
    double alpha_acc = 0.0;
    double ce = 0.0;

    for (const auto& ex : dataset) {
      Gradient g = backward(m, ex.atoms, ex.label);
      conj_acc += g.conj_raw;
      disj_acc += g.disj_raw;
      alpha_acc += g.alpha;
      m.forward(ex.atoms, ws);
      ce += -std::log(ws.z(ex.label));
    }

    double objective = ce;
    if (options.l1_gate_penalty > 0.0) {
      MatrixXd cg = m.conj_gates();
      MatrixXd dg = m.disj_gates();
      objective += options.l1_gate_penalty * (cg.sum() + dg.sum());
      conj_acc.array() += options.l1_gate_penalty * (cg.array() * (1.0 - cg.array()));
      disj_acc.array() += options.l1_gate_penalty * (dg.array() * (1.0 - dg.array()));
    }
    result.loss_curve.push_back(objective);

    m.conj_raw() -= options.lr * conj_acc;
    m.disj_raw() -= options.lr * disj_acc;
    m.alpha() = std::max(1e-3, m.alpha() - options.lr * alpha_acc);
  }
  return result;
}

double accuracy(const DnfModel& model, const std::vector<TrainingExample>& dataset) {
  if (dataset.empty()) throw Error(ErrorCode::empty_dataset, "no examples");
  DnfModel::Workspace ws;
  int correct = 0;
  for (const auto& ex : dataset) {
    model.forward(ex.atoms, ws);
    Eigen::Index arg = 0;
    ws.z.maxCoeff(&arg);
    correct += static_cast<int>(arg) == ex.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

// --- interpretability & selection -------------------------------------------------

std::vector<LabelRule> extract_rules(const DnfModel& model, double gate_threshold) {
  MatrixXd g = model.conj_gates();
  MatrixXd h = model.disj_gates();
  std::vector<LabelRule> rules;
  for (int y = 0; y < model.n_labels(); ++y) {
    LabelRule rule;
    rule.label = y;
    for (int c = 0; c < model.n_clauses(); ++c) {
      if (h(y, c) <= gate_threshold) continue;
      std::vector<Literal> clause;
      for (int a = 0; a < model.n_atoms(); ++a) {
        if (g(c, a) > gate_threshold) clause.push_back({a, false});
        if (g(c, a + model.n_atoms()) > gate_threshold) clause.push_back({a, true});
      }
      rule.clauses.push_back(std::move(clause));
    }
    if (!rule.clauses.empty()) rules.push_back(std::move(rule));
  }
  return rules;
}

bool eval_rule(const std::vector<std::vector<Literal>>& clauses,
               const std::vector<bool>& atoms) {
  for (const auto& clause : clauses) {
    bool all = true;
    for (const auto& lit : clause) {
      bool v = atoms[static_cast<std::size_t>(lit.atom)];
      if (lit.negated == v) {
        all = false;
        break;
      }
    }
    if (all) return true;  // empty clause is vacuously true
  }
  return false;
}

SelectionResult select_trajectory(const DnfModel& model,
                                  const std::vector<VectorXd>& candidates, int accept_label) {
  if (candidates.empty()) throw Error(ErrorCode::no_candidates, "no candidate trajectories");
  if (accept_label < 0 || accept_label >= model.n_labels())
    throw Error(ErrorCode::dimension_mismatch, "accept label out of range");

  SelectionResult result;
  double best = -1.0;
  DnfModel::Workspace ws;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    model.forward(candidates[i], ws);
    result.z.push_back(ws.z);
    if (ws.z(accept_label) > best) {
      best = ws.z(accept_label);
      result.winner = static_cast<int>(i);
    }
  }
  return result;
}

// --- manifest & datasets ------------------------------------------------------------

json PredicateManifest::to_json() const {
  json arr = json::array();
  for (const auto& e : entries)
    arr.push_back({{"predicate_id", e.predicate_id},
                   {"atom_id", e.atom_id},
                   {"question_template", e.question_template}});
  return arr;
}

PredicateManifest PredicateManifest::from_json(const json& doc) {
  if (!doc.is_array())
    throw Error(ErrorCode::schema_error, "predicate manifest must be a JSON array");
  PredicateManifest m;
  for (const auto& je : doc) {
    m.entries.push_back({je.at("predicate_id").get<std::string>(),
                         je.at("atom_id").get<std::string>(),
                         je.at("question_template").get<std::string>()});
  }
  return m;
}

PredicateManifest PredicateManifest::load(const std::filesystem::path& path) {
  return from_json(json::parse(util::read_file(path)));
}

std::vector<TrainingExample> load_dataset(const std::filesystem::path& path) {
  json doc = json::parse(util::read_file(path));
  std::vector<TrainingExample> dataset;
  for (const auto& je : doc.at("examples")) {
    TrainingExample ex;
    auto values = je.at("atoms").get<std::vector<double>>();
    ex.atoms = Eigen::Map<VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    ex.label = je.at("label").get<int>();
    dataset.push_back(std::move(ex));
  }
  return dataset;
}

}  // namespace hawk::dnf
