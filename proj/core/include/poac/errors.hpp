#pragma once

#include <stdexcept>
#include <string>

namespace poac {

// Base class for every error the pipeline can raise. Each subclass matches
// one failure mode named in a module contract so tests can catch precisely.
class PoacError : public std::runtime_error {
public:
    explicit PoacError(const std::string& msg) : std::runtime_error(msg) {}
};

// -- autodiff ---------------------------------------------------------------
class ShapeError : public PoacError {
public:
    using PoacError::PoacError;
};
class DomainError : public PoacError {
public:
    using PoacError::PoacError;
};
class NumericError : public PoacError {
public:
    using PoacError::PoacError;
};

// -- textworld --------------------------------------------------------------
class EmptyPromptError : public PoacError {
public:
    using PoacError::PoacError;
};
class VocabError : public PoacError {
public:
    using PoacError::PoacError;
};
class EmptySceneError : public PoacError {
public:
    using PoacError::PoacError;
};
class DegenerateSceneError : public PoacError {
public:
    using PoacError::PoacError;
};

// -- lexicon ----------------------------------------------------------------
class IndexError : public PoacError {
public:
    using PoacError::PoacError;
};
class TemplateError : public PoacError {
public:
    using PoacError::PoacError;
};
class PoolError : public PoacError {
public:
    using PoacError::PoacError;
};
class RetryableError : public PoacError {
public:
    using PoacError::PoacError;
};
class RejectedRewriteError : public PoacError {
public:
    using PoacError::PoacError;
};

// -- plm --------------------------------------------------------------------
class LengthError : public PoacError {
public:
    using PoacError::PoacError;
};
class MaskError : public PoacError {
public:
    using PoacError::PoacError;
};

// -- diffusion --------------------------------------------------------------
class StepError : public PoacError {
public:
    using PoacError::PoacError;
};

// -- eval / cli -------------------------------------------------------------
class ProtocolError : public PoacError {
public:
    using PoacError::PoacError;
};
class CheckpointError : public PoacError {
public:
    using PoacError::PoacError;
};
class DependencyError : public PoacError {
public:
    DependencyError(const std::string& msg, std::string prerequisite)
        : PoacError(msg), prerequisite_(std::move(prerequisite)) {}
    // Name of the command that must run first, e.g. "pretrain-diffusion".
    const std::string& prerequisite() const { return prerequisite_; }

private:
    std::string prerequisite_;
};
class ConfigError : public PoacError {
public:
    using PoacError::PoacError;
};

}  // namespace poac
