#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relearn/planner.hpp"

namespace relearn {

// Raised for unreadable or malformed bundles and manifests.
class BundleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Plain-text "key = value" file. Blank lines and text after '#' are ignored.
// Duplicate keys are errors.
std::map<std::string, std::string> parse_key_values(std::string_view text, const std::string& source);

// Expected statistics and run defaults of a bundle.
//
//   name, domain, train, test          identity and layout (directories relative to the bundle)
//   horizon, budget, eval_interval     run defaults
//   stand_in                           true for domains that only fill a slot
//   expect.operators                   ground-truth operator count
//   expect.max_ground_actions          largest ground action count over all tasks
//   expect.train_atoms_min/_max        band for every training task's atom count
//   expect.min_plan_length.<task>      lower bound on the found plan length
//   expect.requires.<task>             action whose operator the task cannot do without
//
// <task> is a task file name without its extension.
struct BundleManifest {
  std::string name;
  std::string domain_file = "domain.pddl";
  std::string train_dir = "train";
  std::string test_dir = "test";
  std::size_t horizon = 8;
  std::size_t budget = 500;
  std::size_t eval_interval = 25;
  bool stand_in = false;
  std::optional<std::size_t> operators;
  std::optional<std::size_t> max_ground_actions;
  std::optional<std::size_t> train_atoms_min;
  std::optional<std::size_t> train_atoms_max;
  std::map<std::string, std::size_t> min_plan_length;
  std::map<std::string, std::string> requires_action;
};

BundleManifest parse_manifest(std::string_view text, const std::string& source = "manifest");

struct BundleTask {
  std::string id;  // file stem
  std::string path;
  std::shared_ptr<const TaskContext> context;
};

struct DomainBundle {
  std::string root;
  BundleManifest manifest;
  std::shared_ptr<const Domain> domain;
  std::vector<BundleTask> train;  // file-name order
  std::vector<BundleTask> test;

  std::vector<std::shared_ptr<const TaskContext>> train_contexts() const;
  std::vector<std::shared_ptr<const TaskContext>> test_contexts() const;
};

// Reads <root>/manifest.txt and every .pddl file of the train and test
// directories. Parse errors are rethrown as BundleError naming the file.
DomainBundle load_bundle(const std::string& root);

struct ValidationReport {
  struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
  };
  std::string bundle;
  std::vector<Check> checks;

  bool ok() const;
  // One "PASS|FAIL <name>: <detail>" line per check.
  std::string format() const;
};

// Checks the manifest expectations plus the structural properties every
// bundle must have: distinct effect signatures, every task solvable under
// the ground-truth operators, and every ground-truth operator used by some
// test task's plan.
ValidationReport validate_bundle(const DomainBundle& bundle, const SearchBudget& budget = {}, std::uint64_t seed = 0);

// Throws BundleError listing the failed checks.
void require_valid(const ValidationReport& report);

}  // namespace relearn
