#include "tri/types.hpp"

#include "tri/errors.hpp"

namespace tri {

void validate(const ModelSpec& spec) {
    if (spec.treatment.empty() || spec.outcome.empty()) {
        throw ValidationError("model '" + spec.label + "': treatment and outcome are required");
    }
    const bool frontdoor = spec.kind == ModelKind::Frontdoor;
    if (frontdoor && spec.mediators.empty()) {
        throw ValidationError("model '" + spec.label + "': frontdoor models need mediators");
    }
    if (!frontdoor && !spec.mediators.empty()) {
        throw ValidationError("model '" + spec.label + "': only frontdoor models take mediators");
    }
    if (spec.kind == ModelKind::IV && spec.anchor.empty()) {
        throw ValidationError("model '" + spec.label + "': IV models need an instrument anchor");
    }
}

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Backdoor: return "backdoor";
        case ModelKind::Frontdoor: return "frontdoor";
        case ModelKind::IV: return "iv";
    }
    return "?";
}

const char* to_string(InferenceBranch branch) {
    switch (branch) {
        case InferenceBranch::Wald: return "wald";
        case InferenceBranch::Bootstrap: return "bootstrap";
        case InferenceBranch::Subsample: return "subsample";
    }
    return "?";
}

}  // namespace tri
