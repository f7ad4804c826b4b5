#pragma once

#include "drx/ensemble.hpp"

#include <string>

namespace drx {

/// Versioned JSON document embedding every member reducer and classifier.
std::string ensemble_to_json(const EnsembleModel& e);
EnsembleModel ensemble_from_json(const std::string& text);

void save_ensemble(const EnsembleModel& e, const std::string& path);
EnsembleModel load_ensemble(const std::string& path);

/// Writes via a temp file and rename so readers never see partial output.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace drx
