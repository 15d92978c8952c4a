#pragma once

#include "hmm/events.hpp"

#include <string>

namespace hmm {

// Case documents are YAML; see docs/case_format.md. Values are converted to
// per-unit on load and devices are ordered by id.
PowerSystemCase parse_case(const std::string& document);
PowerSystemCase load_case(const std::string& path);

// Reads the `events` section of a case or scenario document.
EventSchedule parse_schedule(const std::string& document, const PowerSystemCase& c);
EventSchedule load_schedule(const std::string& path, const PowerSystemCase& c);

std::string read_text_file(const std::string& path);

}  // namespace hmm
