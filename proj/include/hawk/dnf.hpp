#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace hawk::dnf {

using json = nlohmann::json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Truth value of one logic atom, mu in [-1, 1], from yes/no token logits.
// Computed as 2*sigmoid(v_yes - v_no) - 1, the numerically stable form.
double truth_from_logits(double v_yes, double v_no);

// Truth value from m sampled yes/no replies: 2*m_yes/(m_yes+m_no) - 1.
double truth_from_samples(int m_yes, int m_no);

struct AtomTruth {
  int predicate_index = 0;
  int atom_index = 0;
  double mu = 0.0;  // clamped to [-1, 1] at construction

  AtomTruth(int predicate, int atom, double value);
};

struct LabelScores {
  VectorXd s;  // per-label clause aggregates in [0, 1]
  VectorXd z;  // softmax(alpha * s); strictly positive, sums to 1
};

struct Gradient {
  MatrixXd conj_raw;
  MatrixXd disj_raw;
  double alpha = 0.0;
};

// Differentiable DNF over atom truths: soft conjunctions (product t-norm
// with a sigmoid membership gate per literal polarity) feeding per-label
// probabilistic-sum disjunctions, scored through a temperature softmax.
// Saturating the raw weights (+/-kHardRaw) recovers classical DNF exactly.
class DnfModel {
 public:
  static constexpr double kHardRaw = 1000.0;  // sigmoid(+/-1000) is exactly 1/0

  DnfModel() = default;
  DnfModel(int n_atoms, int n_clauses, int n_labels);

  // Seeded small-random init: raw weights uniform in [-2.2, -1.8] (gates
  // near 0.1), alpha 5.0.
  static DnfModel init(int n_atoms, int n_clauses, int n_labels, std::uint64_t seed);

  int n_atoms() const { return n_atoms_; }
  int n_clauses() const { return n_clauses_; }
  int n_labels() const { return n_labels_; }

  // Raw parameters; gate = sigmoid(raw). Conjunction columns [0, A) gate the
  // positive literal of each atom, [A, 2A) the negated literal.
  MatrixXd& conj_raw() { return conj_raw_; }
  const MatrixXd& conj_raw() const { return conj_raw_; }
  MatrixXd& disj_raw() { return disj_raw_; }
  const MatrixXd& disj_raw() const { return disj_raw_; }
  double& alpha() { return alpha_; }
  double alpha() const { return alpha_; }
  std::uint64_t seed() const { return seed_; }

  MatrixXd conj_gates() const;
  MatrixXd disj_gates() const;

  // Hard-logic construction helpers (exact 0/1 gates).
  void clear_gates();
  void set_conj_literal(int clause, int atom, bool negated, bool on);
  void set_disj_clause(int label, int clause, bool on);

  struct Workspace {
    VectorXd lit;   // 2A unit-interval literals [x; 1-x]
    MatrixXd g;     // C x 2A conjunction gates
    MatrixXd t;     // C x 2A gated literal factors
    VectorXd conj;  // C
    MatrixXd h;     // Y x C disjunction gates
    MatrixXd u;     // Y x C
    VectorXd s;     // Y
    VectorXd z;     // Y
  };

  LabelScores forward(const VectorXd& atoms) const;
  void forward(const VectorXd& atoms, Workspace& ws) const;

  json to_json() const;
  static DnfModel from_json(const json& doc);
  void save(const std::filesystem::path& path) const;
  static DnfModel load(const std::filesystem::path& path);

 private:
  int n_atoms_ = 0;
  int n_clauses_ = 0;
  int n_labels_ = 0;
  MatrixXd conj_raw_;  // C x 2A
  MatrixXd disj_raw_;  // Y x C
  double alpha_ = 5.0;
  std::uint64_t seed_ = 0;
};

// Cross-entropy of the true label: -log z_label.
double loss(const LabelScores& scores, int label);

// Exact analytic gradient of loss() w.r.t. the raw parameters and alpha,
// by the chain rule through the product forms (exclusive products computed
// with prefix/suffix scans, so zero factors stay exact).
Gradient backward(const DnfModel& model, const VectorXd& atoms, int label);

struct TrainingExample {
  VectorXd atoms;  // length A, values in [-1, 1]
  int label = 0;
};

struct TrainOptions {
  double lr = 0.05;
  int epochs = 500;
  std::uint64_t seed = 0;
  double l1_gate_penalty = 0.0;  // pushes unused gates toward 0
};

struct TrainResult {
  DnfModel model;
  std::vector<double> loss_curve;  // per-epoch objective (mean CE + penalty)
};

// Full-batch gradient descent from seeded init; exactly reproducible.
TrainResult train(const std::vector<TrainingExample>& dataset, int n_clauses, int n_labels,
                  const TrainOptions& options);

double accuracy(const DnfModel& model, const std::vector<TrainingExample>& dataset);

struct Literal {
  int atom = 0;
  bool negated = false;

  auto operator<=>(const Literal&) const = default;
};

struct LabelRule {
  int label = 0;
  std::vector<std::vector<Literal>> clauses;  // each clause a literal set
};

// Hard-thresholds the gates to read back a discrete DNF per label. Labels
// with no surviving clause are omitted.
std::vector<LabelRule> extract_rules(const DnfModel& model, double gate_threshold = 0.5);

// Evaluates an extracted rule on Boolean atoms (true/false per atom).
bool eval_rule(const std::vector<std::vector<Literal>>& clauses,
               const std::vector<bool>& atoms);

struct SelectionResult {
  int winner = 0;
  std::vector<VectorXd> z;  // per-candidate label distribution
};

// Scores every candidate and picks the argmax of z at the accept label;
// ties break toward the lowest candidate index.
SelectionResult select_trajectory(const DnfModel& model,
                                  const std::vector<VectorXd>& candidates,
                                  int accept_label = 1);

// Binds flattened atoms to the yes/no questions that produce them.
struct PredicateBinding {
  std::string predicate_id;
  std::string atom_id;
  std::string question_template;
};

struct PredicateManifest {
  std::vector<PredicateBinding> entries;

  int atom_count() const { return static_cast<int>(entries.size()); }
  json to_json() const;
  static PredicateManifest from_json(const json& doc);
  static PredicateManifest load(const std::filesystem::path& path);
};

// Training-data file: {"examples": [{"atoms": [...], "label": n}, ...]}.
std::vector<TrainingExample> load_dataset(const std::filesystem::path& path);

}  // namespace hawk::dnf
