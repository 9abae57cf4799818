"""News-topic sentiment panels and one-day-ahead index regression."""

from .corpus import CrawlPolicy, NewsItem, load_corpus, save_corpus
from .errors import DataError, NumericError, PipelineError, UsageError
from .panel import (
    DailyPanel,
    DesignMatrix,
    MinMaxScaler,
    OhlcSeries,
    aggregate_daily,
    join_calendar,
    load_ohlc,
    make_lagged,
    split,
)
from .models import (
    FittedModel,
    HyperGrid,
    ModelSpec,
    condition_number,
    fit_elastic_net,
    fit_lasso,
    fit_ols,
    fit_ridge,
    grid_search,
    predict,
)
from .report import EvalReport, emit_report, rmse, top_k_sentiment_coeffs
from .sentiment import (
    ClassifierOutput,
    Lexicon,
    SentimentScore,
    bundled_lexicon,
    load_external_scores,
    load_lexicon,
    prob_to_score,
    score_text_lexicon,
    tokenize,
)
from .topics import TopicCatalog, assign_topics, build_catalog, extract_topic

__version__ = "0.1.0"
