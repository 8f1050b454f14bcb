from celery import shared_task
from celery.utils.log import get_task_logger

from bench.harness import run_case

logger = get_task_logger(__name__)


# Один прогон Монте-Карло; запись возвращается как есть, ошибки внутри уже перехвачены
@shared_task
def run_case_task(config: dict, index: int) -> dict:
    record = run_case(config, index)
    if record['status'] == 'failed':
        logger.error('Прогон %d: %s', index, record.get('error'))
    return record
