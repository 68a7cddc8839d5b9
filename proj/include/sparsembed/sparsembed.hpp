#pragma once

#include "errors.hpp"
#include "numcore.hpp"
#include "textprep.hpp"
#include "embed_io.hpp"
#include "spowv.hpp"
#include "spine.hpp"
#include "eval_intrinsic.hpp"
#include "eval_interpret.hpp"
#include "eval_extrinsic.hpp"
#include "synthetic.hpp"
