#pragma once

#include <string>

#include "gael/errors.hpp"
#include "gael/gmm.hpp"
#include "gael/trainer.hpp"

namespace gael {

// JSON persistence for fitted mixtures and training checkpoints. Numbers are
// written with shortest-round-trip formatting, so every finite double comes
// back bit-identical and a saved checkpoint resumes exactly.
//
// Write failures throw IoError; malformed or structurally wrong files throw
// ParseError naming the path.

std::string to_string(GanKind kind);
GanKind gan_kind_from_string(const std::string& s);  // throws std::invalid_argument

std::string to_string(CovMode mode);
CovMode cov_mode_from_string(const std::string& s);  // throws std::invalid_argument

void save_gmm(const GmmModel& model, const std::string& path);
GmmModel load_gmm(const std::string& path);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gael
