#pragma once

#include <stdexcept>
#include <string>

namespace finmark
{
    // The window does not pin down the selection state: either no anchor
    // exists or the left-boundary branches never merge. Callers should
    // enlarge the window.
    struct NoGroundingGap : std::runtime_error
    {
        explicit NoGroundingGap(const std::string &what) : std::runtime_error(what) {}
    };

    // Fewer than two certified special globes; the marking transform has no
    // core region to act on.
    struct InsufficientCore : std::runtime_error
    {
        explicit InsufficientCore(const std::string &what) : std::runtime_error(what) {}
    };

    // A mark symbol does not belong to the configured alphabet.
    struct AlphabetMismatch : std::runtime_error
    {
        explicit AlphabetMismatch(const std::string &what) : std::runtime_error(what) {}
    };

    // Two consecutive trajectory states are equal, so the jump between them
    // cannot be recovered from the path alone.
    struct InvisibleJump : std::runtime_error
    {
        explicit InvisibleJump(const std::string &what) : std::runtime_error(what) {}
    };

    // The encoder's declared coding radius does not cover the marks required
    // for the requested window.
    struct EncoderCoreTooSmall : std::runtime_error
    {
        explicit EncoderCoreTooSmall(const std::string &what) : std::runtime_error(what) {}
    };
}
