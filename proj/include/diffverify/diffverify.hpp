#pragma once

#include "diffverify/interval.hpp"
#include "diffverify/symbolic.hpp"
#include "diffverify/network.hpp"
#include "diffverify/nnet.hpp"
#include "diffverify/forward.hpp"
#include "diffverify/refine.hpp"
#include "diffverify/verifier.hpp"
#include "diffverify/oracle.hpp"
#include "diffverify/report.hpp"
