"""
API Routes - JSON API endpoints
"""

import logging

from flask import Blueprint, current_app, jsonify, request

from services.clone_service import RunConfig, run
from services.errors import VerificationError, VnauError
from services.problem_parser import parse_problem
from services.rigid_engine import head_word, rigidity_from_name
from services.vnau_engine import SearchLimits

logger = logging.getLogger(__name__)

api_bp = Blueprint('api', __name__, url_prefix='/api')


def _limit(payload, key, config_key):
    """The requested limit, capped by the application setting."""
    ceiling = current_app.config.get(config_key)
    value = payload.get(key)
    if value is None:
        return ceiling
    value = int(value)
    if value < 1:
        raise ValueError(f"{key} must be positive")
    return value if ceiling is None else min(value, ceiling)


@api_bp.route('/generalize', methods=['POST'])
def generalize():
    """
    Generalize the two terms of a problem text.

    Body: {"problem": "<problem file text>", "algorithm": "general",
    "rigidity": "lcs", "atoms": "auto", "minimize": true, "binders":
    "canonical", "free_binders": "none", "max_states": N, "max_results": N}
    """
    payload = request.get_json(silent=True)
    if not isinstance(payload, dict) or not payload.get('problem'):
        return jsonify({'error': 'problem text is required'}), 400

    try:
        atoms = payload.get('atoms', 'auto')
        config = RunConfig(
            algorithm=payload.get('algorithm', 'general'),
            rigidity=payload.get('rigidity', 'lcs'),
            atom_base=tuple(atoms) if isinstance(atoms, list) else atoms,
            limits=SearchLimits(max_states=_limit(payload, 'max_states', 'MAX_STATES'),
                                max_results=_limit(payload, 'max_results', 'MAX_RESULTS')),
            minimize=bool(payload.get('minimize', True)),
            output='json',
            free_binders=payload.get('free_binders', 'none'),
            binder_choice=payload.get('binders', 'canonical'),
        )
        report = run(config, parse_problem(payload['problem'], source='request'))
    except VerificationError as error:
        logger.error("verification failed for a request: %s", error)
        return jsonify({'error': str(error)}), 500
    except (VnauError, ValueError, TypeError) as error:
        return jsonify({'error': str(error)}), 400

    return jsonify(report.to_dict()), 200


@api_bp.route('/alignments', methods=['POST'])
def alignments():
    """
    Alignments of the head words of the two hedges of a problem text.

    Body: {"problem": "<problem file text>", "rigidity": "lcs"}
    """
    payload = request.get_json(silent=True)
    if not isinstance(payload, dict) or not payload.get('problem'):
        return jsonify({'error': 'problem text is required'}), 400

    try:
        problem = parse_problem(payload['problem'], source='request')
        rigidity = rigidity_from_name(payload.get('rigidity', 'lcs'))
    except (VnauError, ValueError) as error:
        return jsonify({'error': str(error)}), 400

    w1, w2 = head_word(problem.left), head_word(problem.right)
    found = rigidity(w1, w2)
    return jsonify({
        'left_word': [str(s) for s in w1],
        'right_word': [str(s) for s in w2],
        'alignments': [
            {
                'text': str(alignment),
                'entries': [
                    {'symbol': str(e.symbol), 'left': e.left, 'right': e.right}
                    for e in alignment
                ],
            }
            for alignment in found
        ],
        'count': len(found),
    }), 200
