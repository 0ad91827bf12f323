#pragma once

#include <json.hpp>

#include "emery/characteristics.hpp"
#include "emery/paths.hpp"
#include "emery/uclass.hpp"

namespace emery {

// Insertion-ordered JSON keeps report bytes stable across runs.
using Json = nlohmann::ordered_json;

Json to_json(const ComplexValue& v);
Json to_json(const std::vector<ComplexValue>& v);
Json to_json(const UReport& report);
Json to_json(const TransformedCharacteristics& tc);
Json to_json(const VerificationReport& report);

}  // namespace emery
