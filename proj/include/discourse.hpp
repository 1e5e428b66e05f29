#pragma once

#include "discourse/analytics.hpp"
#include "discourse/config.hpp"
#include "discourse/corpus.hpp"
#include "discourse/cross_validation.hpp"
#include "discourse/error.hpp"
#include "discourse/evaluation.hpp"
#include "discourse/features.hpp"
#include "discourse/lda.hpp"
#include "discourse/lda_classifier.hpp"
#include "discourse/matrix.hpp"
#include "discourse/pca.hpp"
#include "discourse/pipeline.hpp"
#include "discourse/preprocess.hpp"
#include "discourse/random.hpp"
#include "discourse/svm.hpp"
#include "discourse/synthetic.hpp"
#include "discourse/types.hpp"
#include "discourse/util.hpp"
